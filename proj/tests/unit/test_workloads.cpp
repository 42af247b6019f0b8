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

#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "leaklab/collector.hpp"
#include "leaklab/mitigation.hpp"
#include "leaklab/workloads.hpp"

using namespace leaklab;

namespace {

CollectorPolicy policy_with(ChannelSet channels) {
  CollectorPolicy p;
  p.channels = channels;
  return p;
}

const ChannelSet kAll{Channel::kPage, Channel::kCache, Channel::kCipher, Channel::kPmc};

std::vector<std::string> sybil_inputs(const std::string& target) {
  std::vector<std::string> in(99, "URL0");
  in.push_back(target);
  return in;
}

std::size_t fetches_of(const Trace& t, Gpn page) {
  return static_cast<std::size_t>(std::count_if(t.events.begin(), t.events.end(), [&](const TraceEvent& e) {
    auto* cf = std::get_if<CodeFetch>(&e);
    return cf != nullptr && cf->gpn == page;
  }));
}

std::vector<Gpn> code_sequence(const Trace& t) {
  std::vector<Gpn> out;
  for (const auto& e : t.events) {
    if (auto* cf = std::get_if<CodeFetch>(&e)) out.push_back(cf->gpn);
  }
  return out;
}

}  // namespace

// --- Path ORAM -------------------------------------------------------------

TEST_CASE("oram read after write") {
  SimMachine m(1);
  m.set_tracing(false);
  PirDatabase db = make_pir_database(100, 5);
  PathOram oram(m, db.values, false, 7);
  CHECK(oram.invariant_holds());
  for (std::size_t i = 0; i < 100; ++i) CHECK(oram.read(i) == db.values[i]);
  Payload v{};
  v[3] = 42;
  oram.write(17, v);
  CHECK(oram.read(17) == v);
  CHECK(oram.read(18) == db.values[18]);
  CHECK(oram.invariant_holds());
}

TEST_CASE("oram stash stays small over 10^4 accesses on 2^10 blocks") {
  SimMachine m(2);
  m.set_tracing(false);
  PirDatabase db = make_pir_database(1024, 9);
  PathOram oram(m, db.values, false, 11);
  Rng rng(12);
  for (int i = 0; i < 10000; ++i) {
    std::size_t idx = rng.below(1024);
    if (i % 3 == 0) {
      Payload p{};
      p[0] = static_cast<std::uint8_t>(i);
      oram.write(idx, p);
      db.values[idx] = p;
    } else {
      REQUIRE(oram.read(idx) == db.values[idx]);
    }
  }
  CHECK(oram.invariant_holds());
  MESSAGE("max stash " << oram.stash().max);
  CHECK(oram.stash().max < 100);
  CHECK(oram.stash().overflows == 0);
}

TEST_CASE("oram stash overflow is reported, not fatal") {
  SimMachine m(2);
  m.set_tracing(false);
  PirDatabase db = make_pir_database(256, 9);
  PathOram oram(m, db.values, false, 11, 0);
  for (int i = 0; i < 200; ++i) oram.read(static_cast<std::size_t>(i));
  CHECK(oram.stash().overflows > 0);
  CHECK(oram.invariant_holds());
}

TEST_CASE("zero-block flaw keeps rewritten zero payloads stable") {
  for (bool flaw : {false, true}) {
    SimMachine m(3);
    m.set_tracing(false);
    PirDatabase db = make_pir_database(64, 1, 1.0);
    PathOram oram(m, db.values, flaw, 4);
    std::map<std::pair<Gpn, unsigned>, Block> before;
    for (std::size_t p = 0; p < oram.tree_pages(); ++p) {
      for (unsigned b = 0; b < kBlocksPerPage; ++b) {
        before[{oram.first_tree_page() + p, b}] = m.ciphertext_block(oram.first_tree_page() + p, b);
      }
    }
    oram.read(5);
    std::size_t changed = 0;
    for (const auto& [key, ct] : before) changed += m.ciphertext_block(key.first, key.second) != ct;
    // One path of 7 buckets, 4 slots, 5 blocks per slot.
    if (flaw) {
      CHECK(changed <= 7 * 4);
    } else {
      CHECK(changed == 7 * 4 * 5);
    }
  }
}

// --- Linear scan ------------------------------------------------------------

TEST_CASE("linear scan returns the selected value") {
  PirDatabase db = make_pir_database(256, 3);
  for (std::size_t idx : {std::size_t{0}, std::size_t{77}, std::size_t{255}}) {
    SimMachine m(1);
    LinearScanWorkload w(db.values, idx);
    CHECK(run_collect(m, w, CollectorPolicy{}).output == db.values[idx]);
  }
  CHECK_THROWS_AS(LinearScanWorkload(db.values, 256), std::out_of_range);
}

TEST_CASE("linear scan page trace is a function of the database size only") {
  PirDatabase db = make_pir_database(256, 3);
  std::string reference;
  for (std::size_t idx = 0; idx < db.values.size(); ++idx) {
    SimMachine m(1);
    LinearScanWorkload w(db.values, idx);
    std::string text = write_trace(run_collect(m, w, policy_with({Channel::kPage, Channel::kCache, Channel::kPmc})).trace);
    if (idx == 0) reference = text;
    REQUIRE(text == reference);
  }
}

TEST_CASE("linear scan ciphertext pattern depends on the index") {
  PirDatabase db = make_pir_database(256, 3);
  auto cipher_trace = [&](std::size_t idx) {
    SimMachine m(1);
    LinearScanWorkload w(db.values, idx);
    return run_collect(m, w, policy_with({Channel::kPage, Channel::kCipher})).trace;
  };
  Trace first = cipher_trace(0), last = cipher_trace(255);
  CHECK(write_trace(first) != write_trace(last));
  // Not only the ciphertext bytes differ: the position of the accumulator
  // diffs within the event stream moves.
  auto positions = [](const Trace& t, Gpn acc) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < t.events.size(); ++i) {
      auto* ci = std::get_if<CiphertextDiff>(&t.events[i]);
      if (ci != nullptr && ci->gpn == acc) out.push_back(i);
    }
    return out;
  };
  SimMachine m(1);
  LinearScanWorkload probe(db.values, 0);
  run_collect(m, probe, CollectorPolicy{});
  CHECK(positions(first, probe.accumulator_page()) != positions(last, probe.accumulator_page()));
}

// --- Naive lookup -----------------------------------------------------------

TEST_CASE("naive lookup results and path lengths") {
  PirDatabase db = make_pir_database(100, 4);
  auto run = [&](const std::string& key) {
    SimMachine m(1);
    NaiveLookupWorkload w(db, key);
    return run_collect(m, w, policy_with({Channel::kPage, Channel::kCache}));
  };
  auto hit = run("rec-42");
  auto miss = run("absent-key");
  REQUIRE(hit.output.has_value());
  CHECK(*hit.output == db.values[42]);
  CHECK_FALSE(miss.output.has_value());
  CHECK(code_sequence(hit.trace) != code_sequence(miss.trace));
  CHECK(hit.trace.events.size() > miss.trace.events.size());
  CHECK(write_trace(run("rec-42").trace) == write_trace(hit.trace));
}

TEST_CASE("naive lookup: fifth access identifies the key for a 1000-key database") {
  PirDatabase db = make_pir_database(1000, 4);
  std::vector<std::pair<Gpn, std::vector<std::uint8_t>>> sig;
  for (std::size_t i = 0; i < db.keys.size(); ++i) {
    SimMachine m(1);
    NaiveLookupWorkload w(db, db.keys[i]);
    Trace t = run_collect(m, w, policy_with({Channel::kPage, Channel::kCache})).trace;
    std::vector<DataAccess> das;
    for (const auto& e : t.events) {
      if (auto* da = std::get_if<DataAccess>(&e)) das.push_back(*da);
    }
    REQUIRE(das.size() >= 5);
    sig.emplace_back(das[4].gpn, das[4].lines);
  }
  std::size_t pairs = 0, distinct = 0;
  for (std::size_t i = 0; i < sig.size(); ++i) {
    for (std::size_t j = i + 1; j < sig.size(); ++j) {
      ++pairs;
      distinct += sig[i] != sig[j];
    }
  }
  MESSAGE("distinct fraction " << static_cast<double>(distinct) / pairs);
  CHECK(static_cast<double>(distinct) / static_cast<double>(pairs) >= 0.99);
}

// --- PHH --------------------------------------------------------------------

TEST_CASE("phh noiseless limit") {
  std::vector<std::string> in(100, "URL0");
  PhhOutput out = phh_run(in, 1e6, 0.4, false, 1);
  REQUIRE(out.survivors.size() == 1);
  CHECK(out.survivors[0].first == "URL0");
  CHECK(out.survivors[0].second == doctest::Approx(100).epsilon(0.01));
}

TEST_CASE("phh report loop runs once per distinct key") {
  for (const std::string target : {"URL0", "URL1"}) {
    SimMachine m(1);
    PhhWorkload w(sybil_inputs(target), PhhConfig{}, 5);
    auto r = run_collect(m, w, CollectorPolicy{});
    const std::size_t k = target == "URL0" ? 1 : 2;
    CHECK(r.output.distinct_keys == k);
    CHECK(r.output.loop_iterations == k);
    // Every iteration maps the loop page anew after the threshold page.
    CHECK(fetches_of(r.trace, w.layout().report_loop) == k);
  }
}

TEST_CASE("phh mitigated loop length averages k + 201") {
  std::vector<std::string> in = sybil_inputs("URL1");
  double total = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    PhhOutput out = phh_run(in, 0.1, 1e-9, true, s);
    CHECK(out.loop_iterations == out.distinct_keys + out.dummies);
    for (const auto& [key, v] : out.survivors) CHECK(key.rfind(kDummyPrefix, 0) != 0);
    total += static_cast<double>(out.loop_iterations);
  }
  CHECK(std::abs(total / 1000 - (2 + 201)) <= 5);
}

TEST_CASE("phh output never contains dummies even when they survive") {
  std::vector<std::string> in(50, "A");
  for (std::uint64_t s = 0; s < 50; ++s) {
    PhhOutput out = phh_run(in, 5.0, 0.45, true, s);
    for (const auto& [key, v] : out.survivors) CHECK(key == "A");
  }
}

TEST_CASE("phh rejects reserved inputs and bad parameters") {
  CHECK_THROWS_AS(PhhWorkload({"dummy://3"}, PhhConfig{}, 1), std::invalid_argument);
  CHECK_THROWS_AS(PhhWorkload({}, PhhConfig{}, 1), std::invalid_argument);
  PhhConfig bad;
  bad.eps = 0;
  CHECK_THROWS_AS(PhhWorkload({"a"}, bad, 1), std::invalid_argument);
}

TEST_CASE("phh mitigated report window depends on the loop length alone") {
  // Same total length L from different (k, m) splits gives the same view.
  auto window = [](const std::vector<std::string>& in, std::uint64_t seed) {
    PhhConfig cfg;
    cfg.eps = 0.1;
    cfg.mitigated = true;
    cfg.markers = PhhMarkers::kReport;
    SimMachine m(1);
    PhhWorkload w(in, cfg, seed);
    CollectorPolicy p = policy_with({Channel::kPage, Channel::kCache, Channel::kPmc});
    p.targeted = true;
    auto r = run_collect(m, w, p);
    return std::make_pair(r.output.loop_iterations, write_trace(r.trace));
  };
  std::map<std::size_t, std::string> by_len0, by_len1;
  for (std::uint64_t s = 0; s < 200; ++s) {
    auto a = window(sybil_inputs("URL0"), s);
    auto b = window(sybil_inputs("URL1"), s + 1000);
    by_len0.emplace(a.first, a.second);
    by_len1.emplace(b.first, b.second);
  }
  std::size_t compared = 0;
  for (const auto& [len, text] : by_len0) {
    auto it = by_len1.find(len);
    if (it == by_len1.end()) continue;
    ++compared;
    CHECK(it->second == text);
  }
  CHECK(compared > 10);
}

TEST_CASE("phh markers isolate the requested phase") {
  PhhConfig cfg;
  cfg.markers = PhhMarkers::kReport;
  SimMachine m(1);
  PhhWorkload w(sybil_inputs("URL1"), cfg, 3);
  CollectorPolicy p;
  p.targeted = true;
  Trace t = run_collect(m, w, p).trace;
  CHECK(fetches_of(t, w.layout().aggregate_loop) == 0);
  CHECK(fetches_of(t, w.layout().report_loop) == 2);
  CHECK(phh_markers_from_name("both") == PhhMarkers::kBoth);
  CHECK_THROWS_AS(phh_markers_from_name("middle"), std::invalid_argument);
}

// --- Covert channel -----------------------------------------------------------

TEST_CASE("covert channel decodes 100 repetitions of 48 bytes with five faults per byte") {
  std::size_t errors = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    auto msg = make_covert_message(48, rep);
    SimMachine m(rep);
    CovertSender s(msg);
    Trace t = run_collect(m, s, policy_with({Channel::kPage, Channel::kCipher})).trace;
    CovertDecode d = covert_decode(t, s.layout().encoding);
    CHECK_FALSE(d.error_at.has_value());
    for (std::size_t i = 0; i < msg.size(); ++i) errors += i >= d.bytes.size() || d.bytes[i] != msg[i];
    CHECK(data_fault_count(t) == 5 * msg.size());
    CHECK(covert_profile_encoding_page(t) == s.layout().encoding);
  }
  CHECK(errors == 0);
}

TEST_CASE("covert encoding uses the byte value as block index") {
  SimMachine m(1);
  CovertSender s({0x00, 0xff});
  Trace t = run_collect(m, s, policy_with({Channel::kPage, Channel::kCipher})).trace;
  std::vector<unsigned> blocks;
  for (const auto& e : t.events) {
    auto* ci = std::get_if<CiphertextDiff>(&e);
    if (ci != nullptr && ci->gpn == s.layout().encoding) blocks.push_back(ci->block);
  }
  CHECK(blocks == std::vector<unsigned>{0, 255});
}

TEST_CASE("covert decoder reports the first undecodable byte") {
  auto msg = make_covert_message(48, 7);
  SimMachine m(1);
  CovertSender s(msg);
  Trace t = run_collect(m, s, policy_with({Channel::kPage, Channel::kCipher})).trace;
  std::size_t seen = 0;
  for (auto it = t.events.begin(); it != t.events.end(); ++it) {
    auto* ci = std::get_if<CiphertextDiff>(&*it);
    if (ci != nullptr && ci->gpn == s.layout().encoding && seen++ == 17) {
      t.events.erase(it);
      break;
    }
  }
  CovertDecode d = covert_decode(t, s.layout().encoding);
  REQUIRE(d.error_at.has_value());
  CHECK(*d.error_at == 17);
  CHECK(d.bytes.size() == 17);
}

TEST_CASE("covert empty message") {
  SimMachine m(1);
  CovertSender s({});
  Trace t = run_collect(m, s, policy_with({Channel::kPage, Channel::kCipher})).trace;
  CovertDecode d = covert_decode(t, s.layout().encoding);
  CHECK(d.bytes.empty());
  CHECK_FALSE(d.error_at.has_value());
}
