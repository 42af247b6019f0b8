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

#ifndef LEAKLAB_ANALYSIS_HPP_
#define LEAKLAB_ANALYSIS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "leaklab/features.hpp"
#include "leaklab/logreg.hpp"
#include "leaklab/trace.hpp"

namespace leaklab {

// ---------------------------------------------------------------------------
// Analytical bound.

struct DpParams {
  double eps = 0;
  double delta = 0;
};

struct DpBound {
  double value = 0;       // (e^eps - 1) / 4 + delta / 2
  double normalized = 0;  // value / 0.5
  bool useful = true;     // eps < ln(3 - 2 delta)
};

// Throws std::invalid_argument for eps < 0 or delta outside [0, 1).
DpBound dp_bound(DpParams p);

// ---------------------------------------------------------------------------
// Advantage arithmetic.

inline double raw_advantage(double accuracy, double baseline = 0.5) {
  return accuracy > baseline ? accuracy - baseline : 0.0;
}
inline double normalized_advantage(double accuracy, double baseline = 0.5) {
  return baseline >= 1.0 ? 0.0 : raw_advantage(accuracy, baseline) / (1.0 - baseline);
}

struct Summary {
  double mean = 0;
  double std = 0;  // sample standard deviation over trials
};
Summary summarize(std::span<const double> values);

// Stratified split: within each class, a seeded shuffle and the first
// round(split * n_class) go to training. Returns {train, test} row indices,
// each ascending.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
Split stratified_split(const std::vector<int>& labels, double split, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Feature tables.

struct FeatureTable {
  Eigen::MatrixXd x;  // one row per trace
  std::vector<FeatureName> schema;
  std::size_t rows_missing_channels = 0;
  std::vector<std::string> warnings;  // distinct messages
};

FeatureTable build_feature_table(std::span<const Trace> traces, const std::vector<FeatureSet>& sets,
                                 const FeatureParams& params = {}, unsigned jobs = 1);

// Column indices belonging to the given sets.
std::vector<Eigen::Index> columns_of(const std::vector<FeatureName>& schema,
                                     const std::vector<FeatureSet>& sets);

// ---------------------------------------------------------------------------
// Distinguishing advantage.

struct EvalOptions {
  int trials = 5;
  double split = 0.8;
  TrainOptions train;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  bool include_union = true;  // adds a "union" row when more than one set is given
};

struct SetResult {
  std::string name;  // "F1".."F5", "union" or "seq"
  std::vector<double> accuracy;  // per trial
  Summary test_accuracy;
  Summary raw_advantage;
  Summary normalized_advantage;
};

struct AdvantageReport {
  std::vector<SetResult> results;
  int trials = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::optional<DpBound> bound;
  std::vector<std::string> warnings;

  const SetResult* find(std::string_view name) const;
  // Sampling scale of one normalized-advantage estimate under the null,
  // 1 / sqrt(n_test).
  double sigma() const;
};

// Throws std::invalid_argument when a class has fewer than two examples or
// the split leaves either side empty.
AdvantageReport evaluate_advantage(const FeatureTable& table, const std::vector<int>& labels,
                                   const std::vector<FeatureSet>& sets,
                                   const EvalOptions& opts = {});

// ---------------------------------------------------------------------------
// Fingerprinting advantage.

struct GameAdvantage {
  double baseline = 0;
  std::vector<double> accuracy;
  Summary test_accuracy;
  Summary raw_advantage;
  Summary normalized_advantage;
};

struct FingerprintReport {
  GameAdvantage interest;
  GameAdvantage fingerprint;
  int trials = 0;
  std::size_t n_test = 0;
  std::size_t n_member_test = 0;
  // Null sampling scale of the normalized fingerprint estimate:
  // sqrt(s_f (1 - s_f) / n_member_test) / (1 - s_f).
  double fingerprint_sigma() const;
};

// `member[i]` is 1 when trace i's input is in the interest set, and
// `identity[i]` its index in the interest set (ignored for non-members).
FingerprintReport fingerprint_advantage(const FeatureTable& table, const std::vector<int>& member,
                                        const std::vector<int>& identity, double s_c, double s_f,
                                        const std::vector<FeatureSet>& sets,
                                        const EvalOptions& opts = {});

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov-Smirnov.

struct KsResult {
  double d = 0;
  double p_value = 1;
};

// Throws std::invalid_argument on an empty sample.
KsResult ks_test(std::span<const double> a, std::span<const double> b);
// Asymptotic Kolmogorov distribution tail Q(lambda).
double kolmogorov_q(double lambda);

struct KsRow {
  std::string feature;
  KsResult ks;
  double mean0 = 0;
  double mean1 = 0;
};

std::vector<KsRow> ks_table(const FeatureTable& table, const std::vector<int>& labels);
void write_ks_csv(std::ostream& out, const std::vector<KsRow>& rows);

// ---------------------------------------------------------------------------
// Sequence attacker: hashed token n-grams into a logistic model.

struct NgramParams {
  unsigned max_n = 3;
  unsigned log2_dims = 15;
};

// Counts of hashed 1..max_n-grams, log1p-compressed.
SparseRows ngram_features(std::span<const TokenSequence> sequences, const NgramParams& params = {});

struct SeqModel {
  NgramParams params;
  LogRegModel model;
  std::vector<int> predict(std::span<const TokenSequence> sequences) const;
};

SeqModel train_seq_classifier(std::span<const TokenSequence> sequences, const std::vector<int>& labels,
                              const NgramParams& params = {}, const TrainOptions& opts = {});

// Same protocol as evaluate_advantage; one result row named "seq".
SetResult evaluate_seq_advantage(std::span<const TokenSequence> sequences,
                                 const std::vector<int>& labels, const EvalOptions& opts = {},
                                 const NgramParams& params = {});

// ---------------------------------------------------------------------------
// Reports.

nlohmann::ordered_json to_json(const DpBound& b, DpParams p);
nlohmann::ordered_json to_json(const SetResult& r);
nlohmann::ordered_json to_json(const AdvantageReport& r);
nlohmann::ordered_json to_json(const FingerprintReport& r);

struct SweepPoint {
  double eps = 0;
  double delta = 0;
  std::vector<std::pair<std::string, double>> advantage;  // normalized, per set
  DpBound bound;
};

std::string advantage_bar_svg(const AdvantageReport& report, const std::string& title);
std::string sweep_svg(const std::vector<SweepPoint>& points, const std::string& title);
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);

}  // namespace leaklab

#endif  // LEAKLAB_ANALYSIS_HPP_
