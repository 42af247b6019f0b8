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

#ifndef LEAKLAB_SIM_MACHINE_HPP_
#define LEAKLAB_SIM_MACHINE_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "leaklab/trace.hpp"

namespace leaklab {

inline constexpr std::size_t kPageSize = 4096;
inline constexpr std::size_t kLineSize = 64;
inline constexpr std::size_t kBlockSize = 16;
static_assert(kPageSize == kLinesPerPage * kLineSize);
static_assert(kPageSize == kBlocksPerPage * kBlockSize);

using Addr = std::uint64_t;

constexpr Addr page_base(Gpn gpn) { return gpn * kPageSize; }
constexpr Gpn page_of(Addr addr) { return addr / kPageSize; }

enum class PageKind : std::uint8_t { kCode, kData };

struct PageAttrs {
  bool encrypted = true;
  bool reserved = false;
  PageKind kind = PageKind::kData;
};

// Raw events recorded by the machine, before any collector policy applies.
namespace mem {
struct Exec {
  Gpn gpn;
  std::uint32_t instructions;
};
struct Read {
  Gpn gpn;
  std::uint8_t line;
};
struct Write {
  Gpn gpn;
  std::uint8_t line;
  std::uint8_t block;
  Block old_plain;
  Block new_plain;
};
struct Branch {
  bool taken;
  bool is_return;
};
struct MarkerRaw {
  MarkerKind kind;
};
struct StepBoundary {};
}  // namespace mem

using MemEvent =
    std::variant<mem::Exec, mem::Read, mem::Write, mem::Branch, mem::MarkerRaw, mem::StepBoundary>;

// Out-of-bounds guest access.
class WorkloadFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Keyed, address-tweaked deterministic "encryption" of one 16-byte block.
Block ciphertext_of(std::uint64_t cipher_seed, Gpn gpn, unsigned block_index, const Block& plain);

// What the collector may know about the machine besides the raw tap.
struct MachineView {
  std::uint64_t cipher_seed = 0;
  const std::map<Gpn, PageAttrs>* attrs = nullptr;

  const PageAttrs& attrs_of(Gpn gpn) const;
};

class SimMachine {
 public:
  // Code and data pages are handed out from separate, increasing ranges so
  // that page numbers are stable for a given allocation sequence.
  explicit SimMachine(std::uint64_t cipher_seed, Gpn code_base = 0x123000,
                      Gpn data_base = 0x140000);

  SimMachine(const SimMachine&) = delete;
  SimMachine& operator=(const SimMachine&) = delete;
  SimMachine(SimMachine&&) = default;
  SimMachine& operator=(SimMachine&&) = default;

  // Allocates `count` contiguous zero-filled pages and returns the first gpn.
  Gpn alloc_pages(std::size_t count, PageKind kind);
  Gpn alloc_code_page() { return alloc_pages(1, PageKind::kCode); }

  void set_attrs(Gpn gpn, PageAttrs attrs);
  const PageAttrs& attrs(Gpn gpn) const;
  bool is_mapped(Gpn gpn) const { return pages_.count(gpn) != 0; }

  // Instrumented guest operations; each records MemEvents while tracing.
  void exec(Gpn code_page, std::uint32_t instructions = 16);
  void branch(bool taken, bool is_return = false);
  void read(Addr addr, std::span<std::uint8_t> out);
  void write(Addr addr, std::span<const std::uint8_t> data);
  std::uint64_t read_u64(Addr addr);
  void write_u64(Addr addr, std::uint64_t value);
  // Touches the lines in [addr, addr + len) without copying anything out.
  void touch(Addr addr, std::size_t len);
  void marker(MarkerKind kind);
  void step();

  // Untraced access for setup and verification.
  void poke(Addr addr, std::span<const std::uint8_t> data);
  void peek(Addr addr, std::span<std::uint8_t> out) const;
  std::uint64_t peek_u64(Addr addr) const;
  Block plaintext_block(Gpn gpn, unsigned block_index) const;
  Block ciphertext_block(Gpn gpn, unsigned block_index) const;

  std::uint64_t cipher_seed() const { return cipher_seed_; }
  MachineView view() const { return MachineView{cipher_seed_, &attrs_}; }

  void set_tracing(bool on) { tracing_ = on; }
  bool tracing() const { return tracing_; }
  const std::vector<MemEvent>& tap() const { return tap_; }
  std::vector<MemEvent> take_tap();
  void clear_tap() { tap_.clear(); }

 private:
  using Page = std::array<std::uint8_t, kPageSize>;

  Page& page_for(Addr addr, std::size_t len, const char* op);
  const Page& page_for(Addr addr, std::size_t len, const char* op) const;

  std::uint64_t cipher_seed_;
  Gpn next_code_;
  Gpn next_data_;
  std::map<Gpn, std::unique_ptr<Page>> pages_;
  std::map<Gpn, PageAttrs> attrs_;
  std::vector<MemEvent> tap_;
  bool tracing_ = true;
};

}  // namespace leaklab

#endif  // LEAKLAB_SIM_MACHINE_HPP_
