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

#ifndef LEAKLAB_HASHMAP_HPP_
#define LEAKLAB_HASHMAP_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leaklab/sim_machine.hpp"

namespace leaklab {

// Bucket counts a table moves through as it grows.
const std::vector<std::uint64_t>& default_prime_ladder();

// Chained hash table living in simulated memory, modeled on a node-based
// unordered_map with max load factor 1. Every operation runs on its own code
// page and ends with a step boundary.
//
// Node layout (256 bytes, 16 per page):
//   0 hash | 8 next node + 1 | 16 count | 24 key length | 32 key bytes
class SimHashMap {
 public:
  static constexpr std::size_t kNodeSize = 256;
  static constexpr std::size_t kNodesPerPage = kPageSize / kNodeSize;
  static constexpr std::size_t kMaxKeyLen = kNodeSize - 32;
  static constexpr std::size_t kBucketsPerPage = kPageSize / 8;

  struct CodePages {
    Gpn hash, probe, new_node, increment, rehash;
  };

  struct InsertResult {
    std::size_t node;
    bool created;
    bool rehashed;
  };

  explicit SimHashMap(SimMachine& machine,
                      std::vector<std::uint64_t> ladder = default_prime_ladder());

  // Adds `add` to the key's count, creating the node when absent. Rehashes
  // first when the new key would push size past bucket_count.
  InsertResult insert(std::string_view key, std::uint64_t add = 1);

  // Traced lookup; returns the node index.
  std::optional<std::size_t> find(std::string_view key);

  // Traced read of a node's count field.
  std::uint64_t read_count(std::size_t node);

  std::uint64_t size() const { return size_; }
  std::uint64_t bucket_count() const { return bucket_count_; }
  std::uint64_t rehash_count() const { return rehashes_; }
  const CodePages& code() const { return code_; }
  Addr header_addr() const { return page_base(header_); }
  Addr node_addr(std::size_t node) const;
  Addr bucket_addr(std::uint64_t bucket) const;

  // Untraced inspection.
  std::uint64_t peek_count(std::size_t node) const;
  std::string peek_key(std::size_t node) const;

  static std::uint64_t hash_key(std::string_view key);

 private:
  void hash_op(std::string_view key);
  // Walks the chain for `key`; returns the node index if present.
  std::optional<std::size_t> probe(std::string_view key, std::uint64_t h);
  void rehash();
  Addr alloc_node();

  SimMachine& m_;
  std::vector<std::uint64_t> ladder_;
  std::size_t rung_ = 0;
  CodePages code_{};
  Gpn header_ = 0;
  std::vector<Gpn> bucket_pages_;
  std::vector<Gpn> node_pages_;
  std::uint64_t bucket_count_ = 0;
  std::uint64_t size_ = 0;
  std::uint64_t rehashes_ = 0;
};

}  // namespace leaklab

#endif  // LEAKLAB_HASHMAP_HPP_
