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

#include "leaklab/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "leaklab/rng.hpp"
#include "leaklab/workloads.hpp"

namespace leaklab {

AnalyzeResult analyze_dataset(const LabeledDataset& ds, const AnalyzeOptions& opts) {
  if (ds.traces.empty()) throw std::invalid_argument("dataset is empty");
  AnalyzeResult out;
  out.table = build_feature_table(ds.traces, opts.sets, opts.params, opts.eval.jobs);

  nlohmann::ordered_json j;
  j["schema"] = "leaklab-report/1";
  j["config_hash"] = ds.config_hash;
  j["game"] = ds.config.game == GameKind::kDistinguish ? "distinguish" : "fingerprint";
  j["runs"] = ds.traces.size();
  nlohmann::ordered_json sets = nlohmann::ordered_json::array();
  for (FeatureSet s : opts.sets) sets.push_back(std::string(feature_set_name(s)));
  j["feature_sets"] = sets;
  j["feature_params"] = {{"hist_bins", opts.params.hist_bins},
                         {"max_code_pages", opts.params.max_code_pages},
                         {"max_data_pages", opts.params.max_data_pages}};
  j["seed"] = opts.eval.seed;

  if (ds.config.game == GameKind::kDistinguish) {
    AdvantageReport rep = evaluate_advantage(out.table, ds.labels(), opts.sets, opts.eval);
    if (opts.seq) {
      std::vector<TokenSequence> seqs;
      seqs.reserve(ds.traces.size());
      for (const auto& t : ds.traces) seqs.push_back(tokenize(t));
      rep.results.push_back(evaluate_seq_advantage(seqs, ds.labels(), opts.eval, opts.ngram));
    }
    const auto& w = ds.config.workload;
    if (w.kind == WorkloadConfig::Kind::kPhh && w.phh.mitigated) {
      rep.bound = dp_bound({w.phh.eps, w.phh.delta});
    }
    const auto body = to_json(rep);
    for (const auto& [k, v] : body.items()) j[k] = v;
    out.advantage = std::move(rep);
  } else {
    FingerprintReport rep = fingerprint_advantage(out.table, ds.labels(), ds.identities(), ds.s_c, ds.s_f,
                                                  opts.sets, opts.eval);
    const auto body = to_json(rep);
    for (const auto& [k, v] : body.items()) j[k] = v;
    j["warnings"] = out.table.warnings;
    if (opts.seq) j["warnings"].push_back("--seq is ignored for fingerprinting datasets");
    out.fingerprint = std::move(rep);
  }
  out.report = std::move(j);
  return out;
}

GameConfig default_sweep_config() {
  GameConfig c;
  c.game = GameKind::kDistinguish;
  c.workload.kind = WorkloadConfig::Kind::kPhh;
  c.workload.phh.mitigated = true;
  c.workload.phh.delta = 1e-6;
  c.workload.phh.markers = PhhMarkers::kReport;
  c.policy.channels = ChannelSet{Channel::kPage, Channel::kCache, Channel::kCipher};
  c.x0 = "URL0";
  c.x1 = "URL1";
  c.sybils = {{SybilSpec::Kind::kFixedCopies, 99, "URL0"}};
  c.traces_per_class = 200;
  c.base_seed = 1;
  return c;
}

std::vector<SweepStep> run_sweep(const SweepOptions& opts,
                                 const std::function<void(double, const LabeledDataset&)>& on_step) {
  if (opts.eps_list.empty()) throw std::invalid_argument("sweep: empty epsilon list");
  std::vector<SweepStep> steps;
  for (std::size_t i = 0; i < opts.eps_list.size(); ++i) {
    GameConfig cfg = opts.base;
    cfg.workload.phh.eps = opts.eps_list[i];
    if (opts.delta) cfg.workload.phh.delta = *opts.delta;
    cfg.workload.phh.mitigated = true;
    cfg.base_seed = derive_seed(opts.base.base_seed, i, "sweep");
    cfg.validate();
    LabeledDataset ds = run_distinguishing_game(cfg);
    if (on_step) on_step(opts.eps_list[i], ds);
    AnalyzeResult res = analyze_dataset(ds, opts.analyze);
    SweepStep step;
    step.report = std::move(*res.advantage);
    step.report_json = std::move(res.report);
    step.config_hash = ds.config_hash;
    step.point.eps = cfg.workload.phh.eps;
    step.point.delta = cfg.workload.phh.delta;
    step.point.bound = dp_bound({step.point.eps, step.point.delta});
    for (const auto& r : step.report.results) step.point.advantage.emplace_back(r.name, r.normalized_advantage.mean);
    steps.push_back(std::move(step));
  }
  return steps;
}

// ---------------------------------------------------------------------------

double CovertResult::error_rate() const {
  return bytes_sent == 0 ? 0.0 : static_cast<double>(byte_errors) / static_cast<double>(bytes_sent);
}

double CovertResult::faults_per_byte() const {
  std::size_t faults = 0;
  for (const auto& r : reps) faults += r.faults;
  return bytes_sent == 0 ? 0.0 : static_cast<double>(faults) / static_cast<double>(bytes_sent);
}

CovertRep decode_covert(const Trace& trace, const std::vector<std::uint8_t>& sent) {
  CovertRep rep;
  rep.sent = sent;
  rep.faults = data_fault_count(trace);
  if (auto page = covert_profile_encoding_page(trace)) {
    CovertDecode d = covert_decode(trace, *page);
    rep.decoded = std::move(d.bytes);
    rep.decode_error_at = d.error_at;
    rep.decode_error = std::move(d.error);
  } else if (!sent.empty()) {
    rep.decode_error_at = 0;
    rep.decode_error = "no ciphertext changes in the trace";
  }
  const std::size_t n = std::max(sent.size(), rep.decoded.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= sent.size() || i >= rep.decoded.size() || sent[i] != rep.decoded[i]) {
      rep.wrong_positions.push_back(i);
    }
  }
  return rep;
}

namespace {

CollectorPolicy covert_policy() {
  CollectorPolicy p;
  p.channels = ChannelSet{Channel::kPage, Channel::kCipher};
  return p;
}

void tally(CovertResult& r) {
  r.bytes_sent = 0;
  r.byte_errors = 0;
  for (const auto& rep : r.reps) {
    r.bytes_sent += rep.sent.size();
    r.byte_errors += rep.wrong_positions.size();
  }
}

std::string rep_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rep_%03zu.%s", i, ext);
  return buf;
}

}  // namespace

CovertResult run_covert(std::size_t bytes, std::size_t reps, std::uint64_t seed) {
  CovertResult out;
  for (std::size_t i = 0; i < reps; ++i) {
    auto msg = make_covert_message(bytes, derive_seed(seed, i, "message"));
    SimMachine m(derive_seed(seed, i, "cipher"));
    CovertSender sender(msg);
    Trace t = run_collect(m, sender, covert_policy(), derive_seed(seed, i, "run")).trace;
    CovertRep rep = decode_covert(t, msg);
    rep.trace = std::move(t);
    out.reps.push_back(std::move(rep));
  }
  tally(out);
  return out;
}

std::string to_hex_bytes(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  for (auto b : bytes) {
    s += kDigits[b >> 4];
    s += kDigits[b & 15];
  }
  return s;
}

std::vector<std::uint8_t> from_hex_bytes(std::string_view hex) {
  while (!hex.empty() && (hex.back() == '\n' || hex.back() == '\r' || hex.back() == ' ')) hex.remove_suffix(1);
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument(std::string("bad hex digit '") + c + "'");
  };
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<std::uint8_t>(nib(hex[i]) << 4 | nib(hex[i + 1])));
  }
  return out;
}

void save_covert(const CovertResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < result.reps.size(); ++i) {
    write_trace_file((dir / rep_name(i, "trace")).string(), result.reps[i].trace);
    std::ofstream msg(dir / rep_name(i, "msg"), std::ios::binary);
    if (!msg) throw std::runtime_error("cannot write " + (dir / rep_name(i, "msg")).string());
    msg << to_hex_bytes(result.reps[i].sent) << '\n';
  }
}

CovertResult replay_covert(const std::filesystem::path& dir) {
  CovertResult out;
  for (std::size_t i = 0;; ++i) {
    const auto trace_path = dir / rep_name(i, "trace");
    if (!std::filesystem::exists(trace_path)) break;
    std::ifstream msg(dir / rep_name(i, "msg"));
    if (!msg) throw std::runtime_error("missing " + (dir / rep_name(i, "msg")).string());
    std::stringstream ss;
    ss << msg.rdbuf();
    Trace t = read_trace_file(trace_path.string());
    CovertRep rep = decode_covert(t, from_hex_bytes(ss.str()));
    rep.trace = std::move(t);
    out.reps.push_back(std::move(rep));
  }
  if (out.reps.empty()) throw std::runtime_error("no rep_000.trace in " + dir.string());
  tally(out);
  return out;
}

}  // namespace leaklab
