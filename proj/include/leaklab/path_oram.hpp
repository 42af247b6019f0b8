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

#ifndef LEAKLAB_PATH_ORAM_HPP_
#define LEAKLAB_PATH_ORAM_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "leaklab/rng.hpp"
#include "leaklab/sim_machine.hpp"

namespace leaklab {

using Payload = std::array<std::uint8_t, 64>;

struct StashStats {
  std::size_t current = 0;
  std::size_t max = 0;
  std::size_t overflows = 0;  // accesses that ended above the bound
};

// Simplified Path ORAM with bucket capacity 4. The tree lives in simulated
// memory; the position map and the stash are client-private.
//
// Slot layout (80 bytes, 4 per bucket, 12 buckets per page):
//   0 block id + 1 (0 = dummy) | 8 nonce | 16 payload, 4 blocks of 16 bytes
// A stored payload block is the plaintext xor a keystream derived from the
// nonce, and every write draws a fresh nonce. With `zero_block_flaw` set an
// all-zero payload is stored as plain zeros with nonce 0, so rewriting it
// leaves the ciphertext unchanged.
class PathOram {
 public:
  static constexpr std::size_t kZ = 4;
  static constexpr std::size_t kSlotSize = 80;
  static constexpr std::size_t kBucketSize = kZ * kSlotSize;
  static constexpr std::size_t kBucketsPerPage = kPageSize / kBucketSize;

  // Builds the tree from `blocks`. Initial placement is performed with
  // whatever tracing state the machine is in.
  PathOram(SimMachine& machine, const std::vector<Payload>& blocks, bool zero_block_flaw,
           std::uint64_t seed, std::size_t stash_bound = 100);

  Payload read(std::size_t index) { return access(index, nullptr); }
  void write(std::size_t index, const Payload& value) { access(index, &value); }

  std::size_t num_blocks() const { return position_.size(); }
  unsigned height() const { return height_; }
  std::uint64_t leaves() const { return std::uint64_t{1} << height_; }
  const StashStats& stash() const { return stash_stats_; }
  Gpn first_tree_page() const { return tree_; }
  std::size_t tree_pages() const;

  // Every real block sits in the stash or on the path to its leaf.
  bool invariant_holds() const;

 private:
  Payload access(std::size_t index, const Payload* value);
  std::uint64_t bucket_on_path(std::uint64_t leaf, unsigned depth) const;
  Addr slot_addr(std::uint64_t bucket, std::size_t slot) const;
  void write_bucket(std::uint64_t bucket, unsigned depth);
  void read_bucket(std::uint64_t bucket);
  void store_slot(Addr addr, std::uint64_t id_plus_one, const Payload& payload);

  SimMachine& m_;
  Rng rng_;
  bool flaw_;
  std::size_t stash_bound_;
  unsigned height_ = 0;
  Gpn tree_ = 0;
  Gpn read_code_ = 0;
  Gpn write_code_ = 0;
  std::vector<std::uint64_t> position_;
  std::map<std::size_t, Payload> stash_;
  StashStats stash_stats_;
};

}  // namespace leaklab

#endif  // LEAKLAB_PATH_ORAM_HPP_
