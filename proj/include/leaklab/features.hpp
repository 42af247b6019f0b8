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

#ifndef LEAKLAB_FEATURES_HPP_
#define LEAKLAB_FEATURES_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "leaklab/trace.hpp"

namespace leaklab {

enum class FeatureSet : std::uint8_t { kF1 = 1, kF2, kF3, kF4, kF5 };

inline constexpr FeatureSet kAllFeatureSets[] = {FeatureSet::kF1, FeatureSet::kF2, FeatureSet::kF3,
                                                 FeatureSet::kF4, FeatureSet::kF5};

std::string_view feature_set_name(FeatureSet s);
// Accepts "F1".."F5"; throws std::invalid_argument otherwise.
FeatureSet feature_set_from_name(std::string_view name);
// Comma list; "all" or "union" expands to F1..F5.
std::vector<FeatureSet> parse_feature_sets(std::string_view list);

struct FeatureParams {
  unsigned hist_bins = 10;     // N
  unsigned max_code_pages = 64;  // M_CF
  unsigned max_data_pages = 64;  // M_DA
};

struct FeatureName {
  std::string name;
  FeatureSet set;
};

struct FeatureVector {
  std::vector<double> values;
  std::vector<FeatureName> schema;
  // Set when a requested feature needs a channel the trace was not
  // collected with; those entries are zero.
  bool missing_channels = false;
  std::vector<std::string> warnings;
};

std::vector<FeatureName> feature_schema(const std::vector<FeatureSet>& sets,
                                        const FeatureParams& params = {});

// Features are computed over the marker windows when the trace has markers.
FeatureVector extract_features(const Trace& trace, const std::vector<FeatureSet>& sets,
                               const FeatureParams& params = {});

// Nearest-rank quantile of a sorted sample, q in (0, 1].
double nearest_rank(const std::vector<double>& sorted, double q);

// ---------------------------------------------------------------------------
// Sequence tokens.

namespace token {
inline constexpr std::uint32_t kPad = 0;
inline constexpr std::uint32_t kOov = 1;
inline constexpr std::uint32_t kMarkStart = 2;
inline constexpr std::uint32_t kMarkStop = 3;
inline constexpr std::uint32_t kChanged = 4;
inline constexpr std::uint32_t kLineBase = 5;     // LINE_0..LINE_63
inline constexpr std::uint32_t kBlockBase = 69;   // BLOCK_0..BLOCK_255
inline constexpr std::uint32_t kCodeBase = 400;   // CODE_0..CODE_4799
inline constexpr std::uint32_t kDataBase = 5200;  // DATA_0..DATA_4799
inline constexpr std::uint32_t kPagesPerKind = 4800;
inline constexpr std::uint32_t kVocabSize = 10000;
inline constexpr std::size_t kMaxLen = 5000;
}  // namespace token

struct TokenSequence {
  std::vector<std::uint32_t> tokens;
};

// Page numbers become first-appearance indices per kind, so a uniform
// relabeling of pages leaves the sequence unchanged. Keeps the last
// `max_len` tokens.
TokenSequence tokenize(const Trace& trace, std::size_t max_len = token::kMaxLen);

// ---------------------------------------------------------------------------
// Export.

void write_feature_csv(std::ostream& out, const std::vector<FeatureName>& schema,
                       const std::vector<std::vector<double>>& rows,
                       const std::vector<std::string>& labels);
void write_token_lines(std::ostream& out, const std::vector<TokenSequence>& sequences);

}  // namespace leaklab

#endif  // LEAKLAB_FEATURES_HPP_
