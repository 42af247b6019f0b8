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

#ifndef LEAKLAB_COLLECTOR_HPP_
#define LEAKLAB_COLLECTOR_HPP_

#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>

#include "leaklab/sim_machine.hpp"
#include "leaklab/trace.hpp"

namespace leaklab {

struct CacheNoise {
  double drop_prob = 0.0;  // a touched line goes unobserved
  double flip_prob = 0.0;  // an untouched line is reported
  bool operator==(const CacheNoise&) const = default;
};

struct CollectorPolicy {
  ChannelSet channels{Channel::kPage};
  int data_queue_len = 4;
  bool skip_unencrypted = true;
  bool skip_reserved = true;
  bool targeted = false;
  CacheNoise cache_noise;
  std::uint64_t rng_seed = 0;

  // Throws std::invalid_argument.
  void validate() const;
  bool operator==(const CollectorPolicy&) const = default;
};

class CollectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Replays a raw tap through the hypervisor-side state machine:
//  - one code page mapped at a time; a CodeFetch per switch,
//  - a FIFO of mapped data pages; a DataAccess per miss, the queue growing
//    inside a step that touches more pages than it holds,
//  - cache lines touched while a data page stays mapped are attached to its
//    DataAccess when the page is evicted,
//  - on eviction every block whose ciphertext differs from the fault-time
//    snapshot yields a CiphertextDiff,
//  - a CounterSnapshot follows every CodeFetch/DataAccess,
//  - markers flush the data queue and the mapped code page.
// Pure function of (tap, view, policy); `trace_seed` only lands in the header.
Trace collect(std::span<const MemEvent> tap, const MachineView& view,
              const CollectorPolicy& policy, std::uint64_t trace_seed = 0);

template <typename W>
concept Workload = requires(W w, SimMachine& m) {
  { w.setup(m) };
  { w.run(m) };
};

template <Workload W>
struct CollectResult {
  Trace trace;
  decltype(std::declval<W&>().run(std::declval<SimMachine&>())) output;
};

// Runs setup untraced, then the workload body traced, and collects.
template <Workload W>
CollectResult<W> run_collect(SimMachine& machine, W& workload, const CollectorPolicy& policy,
                             std::uint64_t trace_seed = 0) {
  policy.validate();
  machine.set_tracing(false);
  workload.setup(machine);
  machine.clear_tap();
  machine.set_tracing(true);
  auto output = workload.run(machine);
  auto tap = machine.take_tap();
  return CollectResult<W>{collect(tap, machine.view(), policy, trace_seed), std::move(output)};
}

}  // namespace leaklab

#endif  // LEAKLAB_COLLECTOR_HPP_
