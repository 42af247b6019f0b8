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

#ifndef LEAKLAB_WORKLOADS_HPP_
#define LEAKLAB_WORKLOADS_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "leaklab/hashmap.hpp"
#include "leaklab/path_oram.hpp"
#include "leaklab/sim_machine.hpp"
#include "leaklab/trace.hpp"

namespace leaklab {

// ---------------------------------------------------------------------------
// Private heavy hitters: aggregate into a hash map, then noise and threshold.

enum class PhhMarkers { kNone, kAggregate, kReport, kBoth };

PhhMarkers phh_markers_from_name(std::string_view name);
std::string_view phh_markers_name(PhhMarkers m);

struct PhhConfig {
  double eps = 1.0;
  double delta = 1e-9;
  bool mitigated = false;
  PhhMarkers markers = PhhMarkers::kNone;
  std::vector<std::uint64_t> prime_ladder = default_prime_ladder();

  // Throws std::invalid_argument.
  void validate() const;
};

// Keys in this namespace are reserved for mitigation dummies.
inline constexpr std::string_view kDummyPrefix = "dummy://";

struct PhhOutput {
  std::vector<std::pair<std::string, double>> survivors;  // dummies excluded
  std::size_t distinct_keys = 0;
  std::size_t dummies = 0;
  std::size_t loop_iterations = 0;
  std::uint64_t rehashes = 0;
};

struct PhhLayout {
  Gpn aggregate_loop = 0;
  Gpn report_loop = 0;
  Gpn noise = 0;
  Gpn threshold = 0;
  Gpn emit = 0;
  Gpn stack = 0;
  SimHashMap::CodePages map{};
};

class PhhWorkload {
 public:
  PhhWorkload(std::vector<std::string> inputs, PhhConfig config, std::uint64_t seed);

  void setup(SimMachine& m);
  PhhOutput run(SimMachine& m);

  const PhhLayout& layout() const { return layout_; }

 private:
  void append_key(SimMachine& m, std::size_t node);
  void emit_survivor(SimMachine& m, std::size_t slot, std::size_t node, std::int64_t noisy);

  std::vector<std::string> inputs_;
  PhhConfig config_;
  std::uint64_t seed_;
  PhhLayout layout_;
  std::unique_ptr<SimHashMap> map_;
  std::vector<Gpn> key_pages_;
  std::vector<Gpn> output_pages_;
  std::vector<std::size_t> keys_;
};

// Runs the workload on a fresh machine and returns only its functional output.
PhhOutput phh_run(const std::vector<std::string>& inputs, double eps, double delta, bool mitigated,
                  std::uint64_t rng_seed);

// ---------------------------------------------------------------------------
// PIR lookups over a database of fixed 64-byte values.

struct PirDatabase {
  std::vector<std::string> keys;
  std::vector<Payload> values;
};

// Deterministic database; a `zero_fraction` share of the values is all-zero.
PirDatabase make_pir_database(std::size_t size, std::uint64_t seed, double zero_fraction = 0.0);

// Constant-time scan: every record is read, and the selected value is merged
// into an accumulator block with a branch-free select on every iteration.
class LinearScanWorkload {
 public:
  LinearScanWorkload(std::vector<Payload> db, std::size_t index);
  void setup(SimMachine& m);
  Payload run(SimMachine& m);

  Gpn accumulator_page() const { return acc_; }

 private:
  std::vector<Payload> db_;
  std::size_t index_;
  Gpn loop_ = 0, select_ = 0, stack_ = 0, acc_ = 0, records_ = 0;
};

// One Path ORAM read, wrapped in markers.
class OramWorkload {
 public:
  OramWorkload(std::vector<Payload> db, std::size_t index, bool zero_block_flaw,
               std::uint64_t seed, std::size_t stash_bound = 100);
  void setup(SimMachine& m);
  Payload run(SimMachine& m);

  const PathOram& oram() const { return *oram_; }

 private:
  std::vector<Payload> db_;
  std::size_t index_;
  bool flaw_;
  std::uint64_t seed_;
  std::size_t stash_bound_;
  std::unique_ptr<PathOram> oram_;
};

// Plain hash-map lookup: request, stack, map header, bucket, node, value.
class NaiveLookupWorkload {
 public:
  NaiveLookupWorkload(PirDatabase db, std::string query);
  void setup(SimMachine& m);
  std::optional<Payload> run(SimMachine& m);

 private:
  PirDatabase db_;
  std::string query_;
  std::unique_ptr<SimHashMap> map_;
  Gpn handler_ = 0, copy_ = 0, request_ = 0, stack_ = 0, values_ = 0;
};

// ---------------------------------------------------------------------------
// Covert channel: each byte selects which ciphertext block of a page changes.

struct SecretMessage {
  std::vector<std::uint8_t> bytes;
  std::size_t repetitions = 100;
};

// Deterministic pseudo-random message.
std::vector<std::uint8_t> make_covert_message(std::size_t length, std::uint64_t seed);

struct CovertLayout {
  Gpn loop = 0;
  Gpn encoding = 0;
  Gpn counter = 0;
  Gpn temp = 0;
  Gpn load_a = 0;
  Gpn load_b = 0;
};

class CovertSender {
 public:
  explicit CovertSender(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
  void setup(SimMachine& m);
  std::size_t run(SimMachine& m);
  const CovertLayout& layout() const { return layout_; }

 private:
  std::vector<std::uint8_t> bytes_;
  CovertLayout layout_;
  std::uint64_t counter_ = 0;
};

struct CovertDecode {
  std::vector<std::uint8_t> bytes;
  // Index of the first byte that could not be decoded.
  std::optional<std::size_t> error_at;
  std::string error;
};

// Each fault on the encoding page opens a window; the single ciphertext diff
// on that page inside the window carries the byte.
CovertDecode covert_decode(const Trace& trace, Gpn encoding_page);

// The data page with the most ciphertext diffs; how a receiver without the
// layout finds the encoding page.
std::optional<Gpn> covert_profile_encoding_page(const Trace& trace);

// Number of data-page faults in the trace.
std::size_t data_fault_count(const Trace& trace);

}  // namespace leaklab

#endif  // LEAKLAB_WORKLOADS_HPP_
