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

#include "leaklab/collector.hpp"

#include <bitset>
#include <deque>
#include <limits>
#include <map>
#include <optional>

#include "leaklab/rng.hpp"

namespace leaklab {

void CollectorPolicy::validate() const {
  if (channels.empty()) throw std::invalid_argument("policy: channels must not be empty");
  if (data_queue_len < 1) throw std::invalid_argument("policy: data_queue_len must be >= 1");
  auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob_ok(cache_noise.drop_prob) || !prob_ok(cache_noise.flip_prob)) {
    throw std::invalid_argument("policy: cache_noise probabilities must lie in [0, 1]");
  }
}

namespace {

constexpr std::size_t kNotEmitted = std::numeric_limits<std::size_t>::max();

struct BlockWrites {
  Block first_old;
  Block last_new;
};

struct Resident {
  Gpn gpn = 0;
  std::size_t event_index = kNotEmitted;
  std::bitset<kLinesPerPage> lines;
  bool step_touched = false;
  std::map<std::uint8_t, BlockWrites> writes;
};

class Collector {
 public:
  Collector(const MachineView& view, const CollectorPolicy& policy)
      : view_(view), policy_(policy), noise_rng_(policy.rng_seed) {}

  Trace run(std::span<const MemEvent> tap, std::uint64_t trace_seed) {
    for (const MemEvent& ev : tap) {
      std::visit([this](const auto& e) { on(e); }, ev);
    }
    if (window_open_) throw CollectionError("unbalanced markers: MARK START without MARK STOP");
    flush();
    trace_.header.seed = trace_seed;
    trace_.header.channels = policy_.channels;
    refresh_num_code_pages(trace_);
    return std::move(trace_);
  }

 private:
  bool has(Channel c) const { return policy_.channels.contains(c); }

  bool filtered(Gpn gpn) const {
    const PageAttrs& a = view_.attrs_of(gpn);
    return (policy_.skip_unencrypted && !a.encrypted) || (policy_.skip_reserved && a.reserved);
  }

  bool recording() const { return !policy_.targeted || window_open_; }

  std::size_t emit(TraceEvent ev) {
    if (!recording()) return kNotEmitted;
    trace_.events.push_back(std::move(ev));
    return trace_.events.size() - 1;
  }

  void emit_counters() {
    if (!has(Channel::kPmc)) return;
    emit(CounterSnapshot{counters_});
    counters_ = {};
  }

  void on(const mem::Exec& e) {
    counters_[0] += e.instructions;
    counters_[1] += e.instructions;
    if (filtered(e.gpn) || mapped_code_ == e.gpn) return;
    mapped_code_ = e.gpn;
    if (has(Channel::kPage)) emit(CodeFetch{e.gpn});
    emit_counters();
  }

  void on(const mem::Read& e) {
    counters_[1] += 1;
    if (filtered(e.gpn)) return;
    Resident& r = resident(e.gpn);
    r.lines.set(e.line);
  }

  void on(const mem::Write& e) {
    counters_[1] += 1;
    if (filtered(e.gpn)) return;
    Resident& r = resident(e.gpn);
    r.lines.set(e.line);
    auto [it, inserted] = r.writes.try_emplace(e.block, BlockWrites{e.old_plain, e.new_plain});
    if (!inserted) it->second.last_new = e.new_plain;
  }

  void on(const mem::Branch& e) {
    counters_[2] += 1;
    if (e.taken) counters_[3] += 1;
    if (e.is_return) counters_[4] += 1;
  }

  void on(const mem::MarkerRaw& e) {
    const bool start = e.kind == MarkerKind::kStart;
    if (start == window_open_) {
      throw CollectionError(start ? "unbalanced markers: nested MARK START"
                                  : "unbalanced markers: MARK STOP without MARK START");
    }
    flush();
    if (start) window_open_ = true;
    emit(Marker{e.kind});
    if (!start) window_open_ = false;
    counters_ = {};
  }

  void on(const mem::StepBoundary&) {
    while (queue_.size() > static_cast<std::size_t>(policy_.data_queue_len)) {
      evict(queue_.begin());
    }
    for (Resident& r : queue_) r.step_touched = false;
  }

  Resident& resident(Gpn gpn) {
    for (Resident& r : queue_) {
      if (r.gpn == gpn) {
        r.step_touched = true;
        return r;
      }
    }
    // Miss: make room, preferring pages not needed by the current step.
    while (queue_.size() >= static_cast<std::size_t>(policy_.data_queue_len)) {
      auto victim = queue_.begin();
      while (victim != queue_.end() && victim->step_touched) ++victim;
      if (victim == queue_.end()) break;  // grow for the rest of this step
      evict(victim);
    }
    Resident r;
    r.gpn = gpn;
    r.step_touched = true;
    if (has(Channel::kPage) || has(Channel::kCache)) r.event_index = emit(DataAccess{gpn, {}});
    queue_.push_back(std::move(r));
    emit_counters();
    return queue_.back();
  }

  void evict(std::deque<Resident>::iterator it) {
    Resident r = std::move(*it);
    queue_.erase(it);
    if (has(Channel::kCache) && r.event_index != kNotEmitted) {
      auto& da = std::get<DataAccess>(trace_.events[r.event_index]);
      da.lines = observe_lines(r.lines);
    }
    if (has(Channel::kCipher)) {
      for (const auto& [block, w] : r.writes) {
        Block before = ciphertext_of(view_.cipher_seed, r.gpn, block, w.first_old);
        Block after = ciphertext_of(view_.cipher_seed, r.gpn, block, w.last_new);
        if (before != after) emit(CiphertextDiff{r.gpn, block, before, after});
      }
    }
  }

  std::vector<std::uint8_t> observe_lines(const std::bitset<kLinesPerPage>& touched) {
    const CacheNoise& noise = policy_.cache_noise;
    const bool noisy = noise.drop_prob > 0.0 || noise.flip_prob > 0.0;
    std::vector<std::uint8_t> out;
    for (unsigned line = 0; line < kLinesPerPage; ++line) {
      bool seen = touched.test(line);
      if (noisy) {
        double u = noise_rng_.uniform01();
        seen = seen ? u >= noise.drop_prob : u < noise.flip_prob;
      }
      if (seen) out.push_back(static_cast<std::uint8_t>(line));
    }
    return out;
  }

  void flush() {
    while (!queue_.empty()) evict(queue_.begin());
    mapped_code_.reset();
  }

  const MachineView& view_;
  const CollectorPolicy& policy_;
  Rng noise_rng_;
  Trace trace_;
  std::deque<Resident> queue_;
  std::optional<Gpn> mapped_code_;
  std::array<std::uint64_t, 5> counters_{};
  bool window_open_ = false;
};

}  // namespace

Trace collect(std::span<const MemEvent> tap, const MachineView& view,
              const CollectorPolicy& policy, std::uint64_t trace_seed) {
  policy.validate();
  return Collector(view, policy).run(tap, trace_seed);
}

}  // namespace leaklab
