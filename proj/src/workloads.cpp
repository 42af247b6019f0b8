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

#include "leaklab/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "leaklab/mitigation.hpp"
#include "leaklab/rng.hpp"

namespace leaklab {

// ---------------------------------------------------------------------------
// PHH

PhhMarkers phh_markers_from_name(std::string_view name) {
  if (name == "none") return PhhMarkers::kNone;
  if (name == "aggregate") return PhhMarkers::kAggregate;
  if (name == "report") return PhhMarkers::kReport;
  if (name == "both") return PhhMarkers::kBoth;
  throw std::invalid_argument("unknown marker placement '" + std::string(name) + "'");
}

std::string_view phh_markers_name(PhhMarkers m) {
  switch (m) {
    case PhhMarkers::kNone: return "none";
    case PhhMarkers::kAggregate: return "aggregate";
    case PhhMarkers::kReport: return "report";
    case PhhMarkers::kBoth: return "both";
  }
  return "none";
}

void PhhConfig::validate() const { check_dp_params(eps, delta); }

PhhWorkload::PhhWorkload(std::vector<std::string> inputs, PhhConfig config, std::uint64_t seed)
    : inputs_(std::move(inputs)), config_(std::move(config)), seed_(seed) {
  config_.validate();
  if (inputs_.empty()) throw std::invalid_argument("phh: inputs must not be empty");
  for (const auto& in : inputs_) {
    if (in.rfind(kDummyPrefix, 0) == 0) {
      throw std::invalid_argument("phh: input '" + in + "' uses the reserved dummy namespace");
    }
  }
}

void PhhWorkload::setup(SimMachine& m) {
  const Gpn code = m.alloc_pages(5, PageKind::kCode);
  layout_.aggregate_loop = code;
  layout_.report_loop = code + 1;
  layout_.noise = code + 2;
  layout_.threshold = code + 3;
  layout_.emit = code + 4;
  layout_.stack = m.alloc_pages(1, PageKind::kData);
  map_ = std::make_unique<SimHashMap>(m, config_.prime_ladder);
  layout_.map = map_->code();
  key_pages_.clear();
  output_pages_.clear();
  keys_.clear();
}

void PhhWorkload::append_key(SimMachine& m, std::size_t node) {
  constexpr std::size_t kPerPage = kPageSize / 8;
  if (keys_.size() % kPerPage == 0) key_pages_.push_back(m.alloc_pages(1, PageKind::kData));
  m.write_u64(page_base(key_pages_.back()) + (keys_.size() % kPerPage) * 8, node);
  keys_.push_back(node);
  m.step();
}

void PhhWorkload::emit_survivor(SimMachine& m, std::size_t slot, std::size_t node,
                                std::int64_t noisy) {
  constexpr std::size_t kPerPage = kPageSize / 16;
  if (slot % kPerPage == 0) output_pages_.push_back(m.alloc_pages(1, PageKind::kData));
  const Addr a = page_base(output_pages_.back()) + (slot % kPerPage) * 16;
  m.write_u64(a, node);
  m.write_u64(a + 8, static_cast<std::uint64_t>(noisy));
  m.step();
}

PhhOutput PhhWorkload::run(SimMachine& m) {
  if (!map_) throw std::logic_error("phh: run before setup");
  Rng noise_rng(derive_seed(seed_, 0, "phh/noise"));
  Rng dummy_rng(derive_seed(seed_, 0, "phh/dummies"));
  const bool mark_aggregate =
      config_.markers == PhhMarkers::kAggregate || config_.markers == PhhMarkers::kBoth;
  const bool mark_report =
      config_.markers == PhhMarkers::kReport || config_.markers == PhhMarkers::kBoth;
  PhhOutput out;

  if (mark_aggregate) m.marker(MarkerKind::kStart);
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    m.exec(layout_.aggregate_loop, 6);
    m.write_u64(page_base(layout_.stack), i);
    m.step();
    auto r = map_->insert(inputs_[i]);
    if (r.created) append_key(m, r.node);
  }
  if (mark_aggregate) m.marker(MarkerKind::kStop);
  out.distinct_keys = keys_.size();

  if (config_.mitigated) {
    // Dummies get fresh nodes after the real ones, so the report loop walks
    // nodes 0..L-1 whatever the split between real and dummy keys.
    const std::int64_t count = DummySampler(config_.eps, config_.delta).sample(dummy_rng);
    for (std::int64_t j = 0; j < count; ++j) {
      auto r = map_->insert(std::string(kDummyPrefix) + std::to_string(j));
      append_key(m, r.node);
    }
    out.dummies = static_cast<std::size_t>(count);
  }

  const double threshold = stability_threshold(config_.eps, config_.delta);
  constexpr std::size_t kPerPage = kPageSize / 8;
  std::size_t emitted = 0;
  if (mark_report) m.marker(MarkerKind::kStart);
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    m.exec(layout_.report_loop, 6);
    m.write_u64(page_base(layout_.stack) + 8, i);
    m.step();
    const std::size_t node =
        m.read_u64(page_base(key_pages_[i / kPerPage]) + (i % kPerPage) * 8);
    m.step();
    const std::uint64_t count = map_->read_count(node);
    m.step();
    m.exec(layout_.noise, 40);
    const auto noisy = static_cast<std::int64_t>(
        std::llround(static_cast<double>(count) + noise_rng.laplace(1.0 / config_.eps)));
    m.exec(layout_.threshold, 4);
    const bool keep = static_cast<double>(noisy) >= threshold;
    m.branch(keep);
    if (keep) {
      m.exec(layout_.emit, 8);
      emit_survivor(m, emitted++, node, noisy);
      std::string key = map_->peek_key(node);
      if (key.rfind(kDummyPrefix, 0) != 0) {
        out.survivors.emplace_back(std::move(key), static_cast<double>(noisy));
      }
    }
  }
  if (mark_report) m.marker(MarkerKind::kStop);
  out.loop_iterations = keys_.size();
  out.rehashes = map_->rehash_count();
  return out;
}

PhhOutput phh_run(const std::vector<std::string>& inputs, double eps, double delta, bool mitigated,
                  std::uint64_t rng_seed) {
  PhhConfig cfg;
  cfg.eps = eps;
  cfg.delta = delta;
  cfg.mitigated = mitigated;
  PhhWorkload w(inputs, cfg, rng_seed);
  SimMachine m(rng_seed);
  m.set_tracing(false);
  w.setup(m);
  return w.run(m);
}

// ---------------------------------------------------------------------------
// PIR

PirDatabase make_pir_database(std::size_t size, std::uint64_t seed, double zero_fraction) {
  if (size == 0) throw std::invalid_argument("pir: database size must be positive");
  if (!(zero_fraction >= 0.0 && zero_fraction <= 1.0)) {
    throw std::invalid_argument("pir: zero_fraction must lie in [0, 1]");
  }
  Rng rng(derive_seed(seed, 0, "pir/db"));
  const auto zeros = static_cast<std::size_t>(std::llround(zero_fraction * static_cast<double>(size)));
  PirDatabase db;
  for (std::size_t i = 0; i < size; ++i) {
    db.keys.push_back("rec-" + std::to_string(i));
    Payload p{};
    if (i >= zeros) {
      for (auto& b : p) b = static_cast<std::uint8_t>(rng.next_u64());
      p[0] |= 1;  // never all-zero
    }
    db.values.push_back(p);
  }
  return db;
}

LinearScanWorkload::LinearScanWorkload(std::vector<Payload> db, std::size_t index)
    : db_(std::move(db)), index_(index) {
  if (index_ >= db_.size()) throw std::out_of_range("linear scan: index out of range");
}

void LinearScanWorkload::setup(SimMachine& m) {
  loop_ = m.alloc_pages(2, PageKind::kCode);
  select_ = loop_ + 1;
  stack_ = m.alloc_pages(1, PageKind::kData);
  acc_ = m.alloc_pages(1, PageKind::kData);
  constexpr std::size_t kPerPage = kPageSize / sizeof(Payload);
  records_ = m.alloc_pages((db_.size() + kPerPage - 1) / kPerPage, PageKind::kData);
  for (std::size_t i = 0; i < db_.size(); ++i) m.poke(page_base(records_) + i * 64, db_[i]);
}

Payload LinearScanWorkload::run(SimMachine& m) {
  Payload acc{};
  for (std::size_t i = 0; i < db_.size(); ++i) {
    m.exec(loop_, 6);
    m.write_u64(page_base(stack_), i);
    m.step();
    Payload rec{};
    m.read(page_base(records_) + i * 64, rec);
    m.step();
    m.exec(select_, 20);
    m.read(page_base(acc_), acc);
    // Branch-free select: mask is all ones exactly when i == index.
    const auto mask = static_cast<std::uint8_t>(0 - static_cast<unsigned>(i == index_));
    for (std::size_t b = 0; b < acc.size(); ++b) {
      acc[b] = static_cast<std::uint8_t>((rec[b] & mask) | (acc[b] & ~mask));
    }
    m.write(page_base(acc_), acc);
    m.step();
  }
  return acc;
}

OramWorkload::OramWorkload(std::vector<Payload> db, std::size_t index, bool zero_block_flaw,
                           std::uint64_t seed, std::size_t stash_bound)
    : db_(std::move(db)), index_(index), flaw_(zero_block_flaw), seed_(seed),
      stash_bound_(stash_bound) {
  if (index_ >= db_.size()) throw std::out_of_range("oram: index out of range");
}

void OramWorkload::setup(SimMachine& m) {
  oram_ = std::make_unique<PathOram>(m, db_, flaw_, derive_seed(seed_, 0, "oram"), stash_bound_);
}

Payload OramWorkload::run(SimMachine& m) {
  m.marker(MarkerKind::kStart);
  Payload p = oram_->read(index_);
  m.marker(MarkerKind::kStop);
  return p;
}

NaiveLookupWorkload::NaiveLookupWorkload(PirDatabase db, std::string query)
    : db_(std::move(db)), query_(std::move(query)) {
  if (query_.size() > SimHashMap::kMaxKeyLen) throw std::invalid_argument("naive lookup: key too long");
}

void NaiveLookupWorkload::setup(SimMachine& m) {
  handler_ = m.alloc_pages(2, PageKind::kCode);
  copy_ = handler_ + 1;
  request_ = m.alloc_pages(1, PageKind::kData);
  stack_ = m.alloc_pages(1, PageKind::kData);
  map_ = std::make_unique<SimHashMap>(m);
  constexpr std::size_t kPerPage = kPageSize / sizeof(Payload);
  values_ = m.alloc_pages((db_.values.size() + kPerPage - 1) / kPerPage, PageKind::kData);
  for (std::size_t i = 0; i < db_.keys.size(); ++i) {
    map_->insert(db_.keys[i], i);
    m.poke(page_base(values_) + i * 64, db_.values[i]);
  }
  std::array<std::uint8_t, 8> len{};
  for (int i = 0; i < 8; ++i) len[i] = static_cast<std::uint8_t>(query_.size() >> (8 * i));
  m.poke(page_base(request_), len);
  m.poke(page_base(request_) + 8,
         std::span(reinterpret_cast<const std::uint8_t*>(query_.data()), query_.size()));
}

std::optional<Payload> NaiveLookupWorkload::run(SimMachine& m) {
  m.exec(handler_, 10);
  const std::uint64_t len = m.read_u64(page_base(request_));
  std::string key(len, '\0');
  m.read(page_base(request_) + 8, std::span(reinterpret_cast<std::uint8_t*>(key.data()), len));
  m.write_u64(page_base(stack_), SimHashMap::hash_key(key));
  m.step();
  auto node = map_->find(key);
  m.exec(handler_, 6);
  m.branch(node.has_value());
  if (!node) return std::nullopt;
  m.exec(copy_, 16);
  const std::uint64_t index = map_->read_count(*node);
  Payload value{};
  m.read(page_base(values_) + index * 64, value);
  m.step();
  return value;
}

// ---------------------------------------------------------------------------
// Covert channel

std::vector<std::uint8_t> make_covert_message(std::size_t length, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0, "covert/message"));
  std::vector<std::uint8_t> out(length);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.below(256));
  return out;
}

void CovertSender::setup(SimMachine& m) {
  layout_.loop = m.alloc_pages(1, PageKind::kCode);
  const Gpn data = m.alloc_pages(5, PageKind::kData);
  layout_.encoding = data;
  layout_.counter = data + 1;
  layout_.temp = data + 2;
  layout_.load_a = data + 3;
  layout_.load_b = data + 4;
}

std::size_t CovertSender::run(SimMachine& m) {
  for (std::size_t i = 0; i < bytes_.size(); ++i) {
    m.exec(layout_.loop, 12);
    // A fresh counter value guarantees the block's plaintext changes.
    m.write_u64(page_base(layout_.encoding) + std::size_t{bytes_[i]} * kBlockSize, ++counter_);
    m.step();
    m.write_u64(page_base(layout_.counter), i);
    m.step();
    m.write_u64(page_base(layout_.temp), counter_ ^ i);
    m.step();
    m.read_u64(page_base(layout_.load_a));
    m.step();
    m.read_u64(page_base(layout_.load_b));
    m.step();
    m.branch(i + 1 < bytes_.size());
  }
  return bytes_.size();
}

CovertDecode covert_decode(const Trace& trace, Gpn encoding_page) {
  CovertDecode out;
  bool open = false;
  std::size_t diffs = 0;
  std::uint8_t block = 0;
  auto close = [&]() {
    if (!open) return true;
    open = false;
    if (diffs == 1) {
      out.bytes.push_back(block);
      return true;
    }
    out.error_at = out.bytes.size();
    out.error = diffs == 0 ? "no ciphertext change in window" : "several ciphertext changes in window";
    return false;
  };
  for (const auto& ev : trace.events) {
    if (const auto* da = std::get_if<DataAccess>(&ev); da && da->gpn == encoding_page) {
      if (!close()) return out;
      open = true;
      diffs = 0;
    } else if (const auto* ci = std::get_if<CiphertextDiff>(&ev); ci && ci->gpn == encoding_page) {
      if (!open) {
        out.error_at = out.bytes.size();
        out.error = "ciphertext change outside a fault window";
        return out;
      }
      ++diffs;
      block = ci->block;
    }
  }
  close();
  return out;
}

std::optional<Gpn> covert_profile_encoding_page(const Trace& trace) {
  // Bookkeeping pages change the same block over and over; the encoding page
  // spreads its changes over many blocks.
  std::map<Gpn, std::set<unsigned>> blocks;
  for (const auto& ev : trace.events) {
    if (const auto* ci = std::get_if<CiphertextDiff>(&ev)) blocks[ci->gpn].insert(ci->block);
  }
  std::optional<Gpn> best;
  std::size_t best_count = 0;
  for (const auto& [gpn, seen] : blocks) {
    if (seen.size() > best_count) {
      best = gpn;
      best_count = seen.size();
    }
  }
  return best;
}

std::size_t data_fault_count(const Trace& trace) {
  return static_cast<std::size_t>(std::count_if(trace.events.begin(), trace.events.end(), [](const TraceEvent& e) {
    return std::holds_alternative<DataAccess>(e);
  }));
}

}  // namespace leaklab
