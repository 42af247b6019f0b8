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

#include "leaklab/sim_machine.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <utility>

namespace leaklab {
namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int r) { return (x << r) | (x >> (64 - r)); }

// splitmix64 finalizer.
constexpr std::uint64_t fmix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t load_le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

void store_le(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::string hex_addr(Addr a) {
  std::ostringstream ss;
  ss << "0x" << std::hex << a;
  return ss.str();
}

const PageAttrs kDefaultAttrs{};

}  // namespace

Block ciphertext_of(std::uint64_t cipher_seed, Gpn gpn, unsigned block_index, const Block& plain) {
  // Tweak from the physical address of the block, then four mixing rounds
  // over a 128-bit state so every input bit reaches every output bit.
  const std::uint64_t tweak = fmix((gpn << 8 | block_index) ^ 0x5851f42d4c957f2dULL);
  std::uint64_t a = fmix(cipher_seed ^ tweak) ^ load_le(plain.data());
  std::uint64_t b = fmix(cipher_seed + 0x9e3779b97f4a7c15ULL + tweak) ^ load_le(plain.data() + 8);
  for (int round = 0; round < 4; ++round) {
    a = fmix(a + rotl(b, 17) + static_cast<std::uint64_t>(round));
    b = fmix(b ^ rotl(a, 29) ^ cipher_seed);
  }
  Block out{};
  store_le(out.data(), a);
  store_le(out.data() + 8, b);
  return out;
}

const PageAttrs& MachineView::attrs_of(Gpn gpn) const {
  if (attrs == nullptr) return kDefaultAttrs;
  auto it = attrs->find(gpn);
  return it == attrs->end() ? kDefaultAttrs : it->second;
}

SimMachine::SimMachine(std::uint64_t cipher_seed, Gpn code_base, Gpn data_base)
    : cipher_seed_(cipher_seed), next_code_(code_base), next_data_(data_base) {}

Gpn SimMachine::alloc_pages(std::size_t count, PageKind kind) {
  if (count == 0) throw std::invalid_argument("alloc_pages: count must be positive");
  Gpn& next = kind == PageKind::kCode ? next_code_ : next_data_;
  const Gpn first = next;
  for (std::size_t i = 0; i < count; ++i) {
    pages_.emplace(first + i, std::make_unique<Page>(Page{}));
    attrs_[first + i] = PageAttrs{true, false, kind};
  }
  next += count;
  if (next >= kMaxGpn) throw WorkloadFault("guest physical address space exhausted");
  return first;
}

void SimMachine::set_attrs(Gpn gpn, PageAttrs attrs) {
  if (!is_mapped(gpn)) throw WorkloadFault("set_attrs on unallocated page " + hex_addr(gpn));
  attrs_[gpn] = attrs;
}

const PageAttrs& SimMachine::attrs(Gpn gpn) const {
  auto it = attrs_.find(gpn);
  if (it == attrs_.end()) throw WorkloadFault("attrs of unallocated page " + hex_addr(gpn));
  return it->second;
}

SimMachine::Page& SimMachine::page_for(Addr addr, std::size_t len, const char* op) {
  return const_cast<Page&>(std::as_const(*this).page_for(addr, len, op));
}

const SimMachine::Page& SimMachine::page_for(Addr addr, std::size_t len, const char* op) const {
  if (len == 0 || page_of(addr) != page_of(addr + len - 1)) {
    throw WorkloadFault(std::string(op) + " at " + hex_addr(addr) + " (+" +
                        std::to_string(len) + ") crosses a page boundary");
  }
  auto it = pages_.find(page_of(addr));
  if (it == pages_.end()) {
    throw WorkloadFault(std::string(op) + " of unallocated address " + hex_addr(addr));
  }
  return *it->second;
}

void SimMachine::exec(Gpn code_page, std::uint32_t instructions) {
  if (!is_mapped(code_page)) {
    throw WorkloadFault("exec of unallocated page " + hex_addr(page_base(code_page)));
  }
  if (tracing_) tap_.emplace_back(mem::Exec{code_page, instructions});
}

void SimMachine::branch(bool taken, bool is_return) {
  if (tracing_) tap_.emplace_back(mem::Branch{taken, is_return});
}

void SimMachine::read(Addr addr, std::span<std::uint8_t> out) {
  const Page& page = page_for(addr, out.size(), "read");
  const std::size_t off = addr % kPageSize;
  std::memcpy(out.data(), page.data() + off, out.size());
  touch(addr, out.size());
}

void SimMachine::touch(Addr addr, std::size_t len) {
  page_for(addr, len, "touch");
  if (!tracing_) return;
  const std::size_t off = addr % kPageSize;
  for (std::size_t line = off / kLineSize; line <= (off + len - 1) / kLineSize; ++line) {
    tap_.emplace_back(mem::Read{page_of(addr), static_cast<std::uint8_t>(line)});
  }
}

void SimMachine::write(Addr addr, std::span<const std::uint8_t> data) {
  Page& page = page_for(addr, data.size(), "write");
  const Gpn gpn = page_of(addr);
  const std::size_t off = addr % kPageSize;
  const std::size_t first_block = off / kBlockSize;
  const std::size_t last_block = (off + data.size() - 1) / kBlockSize;
  for (std::size_t b = first_block; b <= last_block; ++b) {
    Block before{};
    std::memcpy(before.data(), page.data() + b * kBlockSize, kBlockSize);
    const std::size_t lo = std::max(off, b * kBlockSize);
    const std::size_t hi = std::min(off + data.size(), (b + 1) * kBlockSize);
    std::memcpy(page.data() + lo, data.data() + (lo - off), hi - lo);
    if (tracing_) {
      Block after{};
      std::memcpy(after.data(), page.data() + b * kBlockSize, kBlockSize);
      tap_.emplace_back(mem::Write{gpn, static_cast<std::uint8_t>(b * kBlockSize / kLineSize),
                                   static_cast<std::uint8_t>(b), before, after});
    }
  }
}

std::uint64_t SimMachine::read_u64(Addr addr) {
  std::array<std::uint8_t, 8> buf{};
  read(addr, buf);
  return load_le(buf.data());
}

void SimMachine::write_u64(Addr addr, std::uint64_t value) {
  std::array<std::uint8_t, 8> buf{};
  store_le(buf.data(), value);
  write(addr, buf);
}

void SimMachine::marker(MarkerKind kind) {
  if (tracing_) tap_.emplace_back(mem::MarkerRaw{kind});
}

void SimMachine::step() {
  if (tracing_) tap_.emplace_back(mem::StepBoundary{});
}

void SimMachine::poke(Addr addr, std::span<const std::uint8_t> data) {
  Page& page = page_for(addr, data.size(), "poke");
  std::memcpy(page.data() + addr % kPageSize, data.data(), data.size());
}

void SimMachine::peek(Addr addr, std::span<std::uint8_t> out) const {
  const Page& page = page_for(addr, out.size(), "peek");
  std::memcpy(out.data(), page.data() + addr % kPageSize, out.size());
}

std::uint64_t SimMachine::peek_u64(Addr addr) const {
  std::array<std::uint8_t, 8> buf{};
  peek(addr, buf);
  return load_le(buf.data());
}

Block SimMachine::plaintext_block(Gpn gpn, unsigned block_index) const {
  if (block_index >= kBlocksPerPage) throw std::out_of_range("block index out of range");
  Block b{};
  peek(page_base(gpn) + block_index * kBlockSize, b);
  return b;
}

Block SimMachine::ciphertext_block(Gpn gpn, unsigned block_index) const {
  return ciphertext_of(cipher_seed_, gpn, block_index, plaintext_block(gpn, block_index));
}

std::vector<MemEvent> SimMachine::take_tap() {
  std::vector<MemEvent> out;
  out.swap(tap_);
  return out;
}

}  // namespace leaklab
