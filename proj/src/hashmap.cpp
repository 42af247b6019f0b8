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

#include "leaklab/hashmap.hpp"

#include <stdexcept>

#include "leaklab/rng.hpp"

namespace leaklab {

const std::vector<std::uint64_t>& default_prime_ladder() {
  static const std::vector<std::uint64_t> ladder = {
      13,    29,    59,    127,   257,    541,    1109,   2357,
      5087,  10273, 20753, 42043, 85229,  172933, 351061, 712697};
  return ladder;
}

SimHashMap::SimHashMap(SimMachine& machine, std::vector<std::uint64_t> ladder)
    : m_(machine), ladder_(std::move(ladder)) {
  if (ladder_.empty()) throw std::invalid_argument("hash map: empty prime ladder");
  for (std::size_t i = 1; i < ladder_.size(); ++i) {
    if (ladder_[i] <= ladder_[i - 1]) {
      throw std::invalid_argument("hash map: prime ladder must be strictly increasing");
    }
  }
  Gpn code = m_.alloc_pages(5, PageKind::kCode);
  code_ = {code, code + 1, code + 2, code + 3, code + 4};
  header_ = m_.alloc_pages(1, PageKind::kData);
  bucket_count_ = ladder_[0];
  bucket_pages_.push_back(
      m_.alloc_pages((bucket_count_ + kBucketsPerPage - 1) / kBucketsPerPage, PageKind::kData));
  m_.write_u64(header_addr() + 8, bucket_count_);
}

std::uint64_t SimHashMap::hash_key(std::string_view key) { return fnv1a64(key); }

Addr SimHashMap::node_addr(std::size_t node) const {
  if (node / kNodesPerPage >= node_pages_.size()) throw std::out_of_range("hash map: bad node");
  return page_base(node_pages_[node / kNodesPerPage]) + (node % kNodesPerPage) * kNodeSize;
}

Addr SimHashMap::bucket_addr(std::uint64_t bucket) const {
  return page_base(bucket_pages_.back()) + bucket * 8;
}

std::uint64_t SimHashMap::peek_count(std::size_t node) const {
  return m_.peek_u64(node_addr(node) + 16);
}

std::string SimHashMap::peek_key(std::size_t node) const {
  const Addr n = node_addr(node);
  std::string key(m_.peek_u64(n + 24), '\0');
  m_.peek(n + 32, std::span(reinterpret_cast<std::uint8_t*>(key.data()), key.size()));
  return key;
}

void SimHashMap::hash_op(std::string_view key) {
  m_.exec(code_.hash, static_cast<std::uint32_t>(8 + 2 * key.size()));
  for (std::size_t i = 0; i < key.size(); i += 8) m_.branch(true);
  m_.branch(false);
  m_.read_u64(header_addr() + 8);
}

std::optional<std::size_t> SimHashMap::probe(std::string_view key, std::uint64_t h) {
  m_.exec(code_.probe, 10);
  std::uint64_t cur = m_.read_u64(bucket_addr(h % bucket_count_));
  while (cur != 0) {
    m_.branch(true);
    const Addr n = node_addr(cur - 1);
    const std::uint64_t nh = m_.read_u64(n);
    m_.branch(nh == h);
    if (nh == h) {
      const std::uint64_t len = m_.read_u64(n + 24);
      std::string stored(len, '\0');
      m_.read(n + 32, std::span(reinterpret_cast<std::uint8_t*>(stored.data()), stored.size()));
      if (stored == key) return cur - 1;
    }
    cur = m_.read_u64(n + 8);
  }
  m_.branch(false);
  return std::nullopt;
}

SimHashMap::InsertResult SimHashMap::insert(std::string_view key, std::uint64_t add) {
  if (key.size() > kMaxKeyLen) throw std::invalid_argument("hash map: key longer than 224 bytes");
  const std::uint64_t h = hash_key(key);
  hash_op(key);
  if (auto found = probe(key, h)) {
    m_.exec(code_.increment, 12);
    const Addr count = node_addr(*found) + 16;
    m_.write_u64(count, m_.read_u64(count) + add);
    m_.branch(true, true);
    m_.step();
    return {*found, false, false};
  }
  const bool rehashed = size_ + 1 > bucket_count_;
  if (rehashed) rehash();

  m_.exec(code_.new_node, 24);
  const std::size_t node = size_;
  const Addr n = alloc_node();
  const Addr slot = bucket_addr(h % bucket_count_);
  m_.write_u64(n, h);
  m_.write_u64(n + 8, m_.read_u64(slot));
  m_.write_u64(n + 16, add);
  m_.write_u64(n + 24, key.size());
  if (!key.empty()) {
    m_.write(n + 32, std::span(reinterpret_cast<const std::uint8_t*>(key.data()), key.size()));
  }
  m_.write_u64(slot, node + 1);
  ++size_;
  m_.write_u64(header_addr(), size_);
  m_.branch(true, true);
  m_.step();
  return {node, true, rehashed};
}

std::optional<std::size_t> SimHashMap::find(std::string_view key) {
  const std::uint64_t h = hash_key(key);
  hash_op(key);
  auto found = probe(key, h);
  m_.branch(true, true);
  m_.step();
  return found;
}

std::uint64_t SimHashMap::read_count(std::size_t node) { return m_.read_u64(node_addr(node) + 16); }

Addr SimHashMap::alloc_node() {
  if (size_ % kNodesPerPage == 0) node_pages_.push_back(m_.alloc_pages(1, PageKind::kData));
  return node_addr(size_);
}

void SimHashMap::rehash() {
  if (rung_ + 1 >= ladder_.size()) throw std::length_error("hash map: prime ladder exhausted");
  const std::uint64_t old_count = bucket_count_;
  const Addr old_base = bucket_addr(0);
  const std::uint64_t new_count = ladder_[++rung_];
  m_.exec(code_.rehash, 32);
  bucket_pages_.push_back(
      m_.alloc_pages((new_count + kBucketsPerPage - 1) / kBucketsPerPage, PageKind::kData));
  const Addr new_base = bucket_addr(0);
  for (std::uint64_t b = 0; b < old_count; ++b) {
    std::uint64_t cur = m_.read_u64(old_base + b * 8);
    while (cur != 0) {
      m_.branch(true);
      const Addr n = node_addr(cur - 1);
      const std::uint64_t nh = m_.read_u64(n);
      const std::uint64_t next = m_.read_u64(n + 8);
      const Addr slot = new_base + (nh % new_count) * 8;
      m_.write_u64(n + 8, m_.read_u64(slot));
      m_.write_u64(slot, cur);
      cur = next;
    }
    m_.branch(false);
    m_.step();
  }
  bucket_count_ = new_count;
  m_.write_u64(header_addr() + 8, bucket_count_);
  ++rehashes_;
}

}  // namespace leaklab
