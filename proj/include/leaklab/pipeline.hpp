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

#ifndef LEAKLAB_PIPELINE_HPP_
#define LEAKLAB_PIPELINE_HPP_

// High-level drivers shared by the command-line tool and the Python module.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "leaklab/analysis.hpp"
#include "leaklab/features.hpp"
#include "leaklab/games.hpp"

namespace leaklab {

// ---------------------------------------------------------------------------
// Analysis of a dataset.

struct AnalyzeOptions {
  std::vector<FeatureSet> sets{FeatureSet::kF1};
  bool seq = false;
  EvalOptions eval;
  FeatureParams params;
  NgramParams ngram;
};

struct AnalyzeResult {
  nlohmann::ordered_json report;
  FeatureTable table;
  std::optional<AdvantageReport> advantage;     // distinguish datasets
  std::optional<FingerprintReport> fingerprint;  // fingerprint datasets
};

AnalyzeResult analyze_dataset(const LabeledDataset& ds, const AnalyzeOptions& opts);

// ---------------------------------------------------------------------------
// Epsilon sweep of the mitigated heavy-hitters game.

// Mitigated PHH, 99 Sybil copies of URL0, x0 = URL0, x1 = URL1, report-stage
// markers, page + cache + cipher channels.
GameConfig default_sweep_config();

struct SweepOptions {
  std::vector<double> eps_list{0.05, 0.1, 0.2, 0.5};
  std::optional<double> delta;  // default: the base config's delta
  GameConfig base = default_sweep_config();
  AnalyzeOptions analyze;
};

struct SweepStep {
  SweepPoint point;
  AdvantageReport report;
  nlohmann::ordered_json report_json;  // as written by analyze
  std::string config_hash;
};

// `on_step` sees each epsilon's dataset before it is dropped.
std::vector<SweepStep> run_sweep(
    const SweepOptions& opts,
    const std::function<void(double eps, const LabeledDataset&)>& on_step = {});

// ---------------------------------------------------------------------------
// Covert channel runs.

struct CovertRep {
  std::vector<std::uint8_t> sent;
  std::vector<std::uint8_t> decoded;
  std::vector<std::size_t> wrong_positions;  // positions where decoded != sent
  std::size_t faults = 0;                    // data-page faults in the trace
  std::optional<std::size_t> decode_error_at;
  std::string decode_error;
  Trace trace;
};

struct CovertResult {
  std::vector<CovertRep> reps;
  std::size_t bytes_sent = 0;
  std::size_t byte_errors = 0;

  double error_rate() const;
  double faults_per_byte() const;
  bool ok() const { return byte_errors == 0; }
};

// Sends `reps` pseudo-random messages of `bytes` bytes and decodes each from
// a page + cipher trace, finding the encoding page by profiling.
CovertResult run_covert(std::size_t bytes, std::size_t reps, std::uint64_t seed);
CovertRep decode_covert(const Trace& trace, const std::vector<std::uint8_t>& sent);

// rep_NNN.trace and rep_NNN.msg (hex) per repetition.
void save_covert(const CovertResult& result, const std::filesystem::path& dir);
CovertResult replay_covert(const std::filesystem::path& dir);

std::string to_hex_bytes(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> from_hex_bytes(std::string_view hex);

}  // namespace leaklab

#endif  // LEAKLAB_PIPELINE_HPP_
