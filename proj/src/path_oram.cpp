/*
 * Copyright 2026 The LeakLab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "leaklab/path_oram.hpp"

#include <algorithm>
#include <stdexcept>

namespace leaklab {
namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::array<std::uint8_t, 8> le_bytes(std::uint64_t v) {
  std::array<std::uint8_t, 8> out{};
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
  return out;
}

std::uint64_t from_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void apply_keystream(Payload& p, std::uint64_t nonce) {
  if (nonce == 0) return;
  for (std::size_t w = 0; w < p.size() / 8; ++w) {
    const auto ks = le_bytes(mix64(nonce * 8 + w));
    for (std::size_t i = 0; i < 8; ++i) p[w * 8 + i] ^= ks[i];
  }
}

bool all_zero(const Payload& p) {
  return std::all_of(p.begin(), p.end(), [](std::uint8_t b) { return b == 0; });
}

}  // namespace

PathOram::PathOram(SimMachine& machine, const std::vector<Payload>& blocks, bool zero_block_flaw,
                   std::uint64_t seed, std::size_t stash_bound)
    : m_(machine), rng_(seed), flaw_(zero_block_flaw), stash_bound_(stash_bound) {
  if (blocks.empty()) throw std::invalid_argument("path oram: no blocks");
  while ((std::uint64_t{1} << height_) < blocks.size()) ++height_;
  read_code_ = m_.alloc_pages(2, PageKind::kCode);
  write_code_ = read_code_ + 1;
  tree_ = m_.alloc_pages(tree_pages(), PageKind::kData);

  position_.resize(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    position_[i] = rng_.below(leaves());
    stash_.emplace(i, blocks[i]);
  }
  // Fill every bucket from the leaves up, exactly as an eviction pass would.
  const std::uint64_t buckets = 2 * leaves() - 1;
  for (std::uint64_t b = buckets; b-- > 0;) {
    unsigned depth = 0;
    for (std::uint64_t x = b + 1; x > 1; x >>= 1) ++depth;
    write_bucket(b, depth);
  }
  stash_stats_.current = stash_.size();
  stash_stats_.max = stash_.size();
}

std::size_t PathOram::tree_pages() const {
  const std::uint64_t buckets = 2 * leaves() - 1;
  return (buckets + kBucketsPerPage - 1) / kBucketsPerPage;
}

std::uint64_t PathOram::bucket_on_path(std::uint64_t leaf, unsigned depth) const {
  // Heap numbering: root 0, children 2b+1 and 2b+2, leaves at depth height_.
  return ((leaves() + leaf) >> (height_ - depth)) - 1;
}

Addr PathOram::slot_addr(std::uint64_t bucket, std::size_t slot) const {
  return page_base(tree_ + bucket / kBucketsPerPage) + (bucket % kBucketsPerPage) * kBucketSize +
         slot * kSlotSize;
}

void PathOram::store_slot(Addr addr, std::uint64_t id_plus_one, const Payload& payload) {
  std::uint64_t nonce = 0;
  if (!(flaw_ && all_zero(payload))) {
    do {
      nonce = rng_.next_u64();
    } while (nonce == 0);
  }
  Payload stored = payload;
  apply_keystream(stored, nonce);
  m_.write_u64(addr, id_plus_one);
  m_.write_u64(addr + 8, nonce);
  m_.write(addr + 16, stored);
}

void PathOram::read_bucket(std::uint64_t bucket) {
  for (std::size_t s = 0; s < kZ; ++s) {
    const Addr a = slot_addr(bucket, s);
    std::array<std::uint8_t, 16> header{};
    m_.read(a, header);
    Payload p{};
    m_.read(a + 16, p);
    const std::uint64_t id = from_le(header.data());
    m_.branch(id != 0);
    if (id != 0) {
      apply_keystream(p, from_le(header.data() + 8));
      stash_.insert_or_assign(id - 1, p);
    }
  }
  m_.step();
}

void PathOram::write_bucket(std::uint64_t bucket, unsigned depth) {
  std::size_t used = 0;
  for (auto it = stash_.begin(); it != stash_.end() && used < kZ;) {
    if (bucket_on_path(position_[it->first], depth) == bucket) {
      store_slot(slot_addr(bucket, used++), it->first + 1, it->second);
      it = stash_.erase(it);
    } else {
      ++it;
    }
  }
  for (; used < kZ; ++used) store_slot(slot_addr(bucket, used), 0, Payload{});
  m_.step();
}

Payload PathOram::access(std::size_t index, const Payload* value) {
  if (index >= position_.size()) throw std::out_of_range("path oram: index out of range");
  const std::uint64_t leaf = position_[index];
  position_[index] = rng_.below(leaves());

  m_.exec(read_code_, 20);
  for (unsigned d = 0; d <= height_; ++d) read_bucket(bucket_on_path(leaf, d));

  auto it = stash_.find(index);
  if (it == stash_.end()) throw std::logic_error("path oram: block missing from path");
  const Payload result = it->second;
  if (value != nullptr) it->second = *value;

  m_.exec(write_code_, 20);
  for (unsigned d = height_ + 1; d-- > 0;) write_bucket(bucket_on_path(leaf, d), d);

  stash_stats_.current = stash_.size();
  stash_stats_.max = std::max(stash_stats_.max, stash_.size());
  if (stash_.size() > stash_bound_) ++stash_stats_.overflows;
  return result;
}

bool PathOram::invariant_holds() const {
  std::vector<bool> seen(position_.size(), false);
  for (const auto& [id, payload] : stash_) seen[id] = true;
  const std::uint64_t buckets = 2 * leaves() - 1;
  for (std::uint64_t b = 0; b < buckets; ++b) {
    unsigned depth = 0;
    for (std::uint64_t x = b + 1; x > 1; x >>= 1) ++depth;
    for (std::size_t s = 0; s < kZ; ++s) {
      const std::uint64_t id = m_.peek_u64(slot_addr(b, s));
      if (id == 0) continue;
      if (id - 1 >= position_.size() || seen[id - 1]) return false;
      if (bucket_on_path(position_[id - 1], depth) != b) return false;
      seen[id - 1] = true;
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
}

}  // namespace leaklab
