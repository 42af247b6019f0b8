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

#include "leaklab/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace leaklab {
namespace {

constexpr std::size_t kF4Families = 5;
constexpr const char* kF4FamilyNames[kF4Families] = {
    "da_per_cf", "lines_total_per_page", "lines_unique_per_page", "ci_total_per_page",
    "ci_unique_per_page"};

std::string padded(unsigned v, int width) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%0*u", width, v);
  return buf;
}

// Appends the 11 + N summary numbers of one family.
void summarize(std::vector<double> sample, unsigned bins, std::vector<double>& out) {
  const std::size_t start = out.size();
  out.resize(start + 11 + bins, 0.0);
  if (sample.empty()) return;
  std::sort(sample.begin(), sample.end());
  double* o = out.data() + start;
  o[0] = sample.front();
  o[1] = sample.back();
  for (int k = 1; k <= 9; ++k) o[1 + k] = nearest_rank(sample, k / 10.0);
  const double hi = sample.back();
  for (double v : sample) {
    std::size_t bin = 0;
    if (hi > 0) bin = std::min<std::size_t>(bins - 1, static_cast<std::size_t>(v * bins / hi));
    o[11 + bin] += 1.0;
  }
}

struct PageTally {
  std::uint64_t lines_total = 0;
  std::set<std::uint8_t> lines;
  std::uint64_t ci_total = 0;
  std::set<std::uint8_t> blocks;
};

}  // namespace

std::string_view feature_set_name(FeatureSet s) {
  static constexpr const char* kNames[] = {"F1", "F2", "F3", "F4", "F5"};
  return kNames[static_cast<int>(s) - 1];
}

FeatureSet feature_set_from_name(std::string_view name) {
  for (FeatureSet s : kAllFeatureSets) {
    if (feature_set_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown feature set '" + std::string(name) + "'");
}

std::vector<FeatureSet> parse_feature_sets(std::string_view list) {
  std::vector<FeatureSet> out;
  auto add = [&](FeatureSet s) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  };
  std::size_t pos = 0;
  while (pos <= list.size()) {
    std::size_t comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    std::string_view item = list.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item == "all" || item == "union") {
      for (FeatureSet s : kAllFeatureSets) add(s);
    } else {
      add(feature_set_from_name(item));
    }
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty feature set list");
  return out;
}

double nearest_rank(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  // Rank ceil(q n), guarded against q n landing a hair above an integer.
  const double qn = q * static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(qn - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

std::vector<FeatureName> feature_schema(const std::vector<FeatureSet>& sets,
                                        const FeatureParams& params) {
  if (params.hist_bins == 0) throw std::invalid_argument("hist_bins must be positive");
  std::vector<FeatureName> out;
  for (FeatureSet s : sets) {
    const std::string p = std::string(feature_set_name(s)) + ".";
    auto add = [&](const std::string& n) { out.push_back({p + n, s}); };
    switch (s) {
      case FeatureSet::kF1:
        for (const char* n : {"cf_total", "cf_unique", "da_total", "da_unique"}) add(n);
        break;
      case FeatureSet::kF2:
        for (const char* n : {"lines_total", "lines_unique", "ci_total", "ci_unique"}) add(n);
        break;
      case FeatureSet::kF3:
        for (unsigned i = 0; i < kLinesPerPage; ++i) add("line_" + padded(i, 2));
        for (unsigned i = 0; i < kBlocksPerPage; ++i) add("block_" + padded(i, 3));
        break;
      case FeatureSet::kF4:
        for (const char* fam : kF4FamilyNames) {
          const std::string f = std::string(fam) + ".";
          add(f + "min");
          add(f + "max");
          for (unsigned k = 1; k <= 9; ++k) add(f + "q" + std::to_string(k));
          for (unsigned b = 0; b < params.hist_bins; ++b) add(f + "hist_" + padded(b, 2));
        }
        break;
      case FeatureSet::kF5:
        for (unsigned i = 0; i < params.max_code_pages; ++i) add("cf_" + padded(i, 2));
        for (unsigned i = 0; i < params.max_data_pages; ++i) add("da_" + padded(i, 2));
        break;
    }
  }
  return out;
}

FeatureVector extract_features(const Trace& trace, const std::vector<FeatureSet>& sets,
                               const FeatureParams& params) {
  FeatureVector fv;
  fv.schema = feature_schema(sets, params);
  fv.values.reserve(fv.schema.size());

  // An empty channel list means the collector did not say; count what is there.
  const ChannelSet& ch = trace.header.channels;
  const bool cache_ok = ch.empty() || ch.contains(Channel::kCache);
  const bool cipher_ok = ch.empty() || ch.contains(Channel::kCipher);

  const std::vector<TraceEvent> events = windowed_events(trace.events);

  std::vector<Gpn> cf_order, da_order;
  std::unordered_map<Gpn, std::uint64_t> cf_count, da_count;
  std::map<Gpn, PageTally> pages;
  std::vector<double> da_per_cf;
  std::array<double, kLinesPerPage> line_hist{};
  std::array<double, kBlocksPerPage> block_hist{};
  std::uint64_t cf_total = 0, da_total = 0, lines_total = 0, ci_total = 0;
  std::set<std::pair<Gpn, unsigned>> lines_seen, blocks_seen;

  for (const TraceEvent& ev : events) {
    if (const auto* cf = std::get_if<CodeFetch>(&ev)) {
      ++cf_total;
      if (cf_count[cf->gpn]++ == 0) cf_order.push_back(cf->gpn);
      da_per_cf.push_back(0.0);
    } else if (const auto* da = std::get_if<DataAccess>(&ev)) {
      ++da_total;
      if (da_count[da->gpn]++ == 0) da_order.push_back(da->gpn);
      if (!da_per_cf.empty()) da_per_cf.back() += 1.0;
      PageTally& t = pages[da->gpn];
      t.lines_total += da->lines.size();
      lines_total += da->lines.size();
      for (std::uint8_t l : da->lines) {
        t.lines.insert(l);
        lines_seen.insert({da->gpn, l});
        line_hist[l % kLinesPerPage] += 1.0;
      }
    } else if (const auto* ci = std::get_if<CiphertextDiff>(&ev)) {
      ++ci_total;
      PageTally& t = pages[ci->gpn];
      ++t.ci_total;
      t.blocks.insert(ci->block);
      blocks_seen.insert({ci->gpn, ci->block});
      block_hist[ci->block] += 1.0;
    }
  }

  auto note_missing = [&](std::string_view set, std::string_view channel) {
    fv.missing_channels = true;
    fv.warnings.push_back(std::string(set) + " needs channel '" + std::string(channel) +
                          "', absent from the trace; zero-filled");
  };
  auto gate = [](bool ok, double v) { return ok ? v : 0.0; };

  for (FeatureSet s : sets) {
    switch (s) {
      case FeatureSet::kF1:
        fv.values.push_back(static_cast<double>(cf_total));
        fv.values.push_back(static_cast<double>(cf_count.size()));
        fv.values.push_back(static_cast<double>(da_total));
        fv.values.push_back(static_cast<double>(da_count.size()));
        break;
      case FeatureSet::kF2:
        if (!cache_ok) note_missing("F2", "cache");
        if (!cipher_ok) note_missing("F2", "cipher");
        fv.values.push_back(gate(cache_ok, static_cast<double>(lines_total)));
        fv.values.push_back(gate(cache_ok, static_cast<double>(lines_seen.size())));
        fv.values.push_back(gate(cipher_ok, static_cast<double>(ci_total)));
        fv.values.push_back(gate(cipher_ok, static_cast<double>(blocks_seen.size())));
        break;
      case FeatureSet::kF3:
        if (!cache_ok) note_missing("F3", "cache");
        if (!cipher_ok) note_missing("F3", "cipher");
        for (double v : line_hist) fv.values.push_back(gate(cache_ok, v));
        for (double v : block_hist) fv.values.push_back(gate(cipher_ok, v));
        break;
      case FeatureSet::kF4: {
        if (!cache_ok) note_missing("F4", "cache");
        if (!cipher_ok) note_missing("F4", "cipher");
        std::vector<double> fam[4];
        for (const auto& [gpn, t] : pages) {
          fam[0].push_back(static_cast<double>(t.lines_total));
          fam[1].push_back(static_cast<double>(t.lines.size()));
          fam[2].push_back(static_cast<double>(t.ci_total));
          fam[3].push_back(static_cast<double>(t.blocks.size()));
        }
        if (!cache_ok) fam[0].clear(), fam[1].clear();
        if (!cipher_ok) fam[2].clear(), fam[3].clear();
        summarize(da_per_cf, params.hist_bins, fv.values);
        for (auto& f : fam) summarize(std::move(f), params.hist_bins, fv.values);
        break;
      }
      case FeatureSet::kF5:
        for (unsigned i = 0; i < params.max_code_pages; ++i) {
          fv.values.push_back(i < cf_order.size() ? static_cast<double>(cf_count[cf_order[i]]) : 0.0);
        }
        for (unsigned i = 0; i < params.max_data_pages; ++i) {
          fv.values.push_back(i < da_order.size() ? static_cast<double>(da_count[da_order[i]]) : 0.0);
        }
        break;
    }
  }
  return fv;
}

TokenSequence tokenize(const Trace& trace, std::size_t max_len) {
  TokenSequence seq;
  std::unordered_map<Gpn, std::uint32_t> code_ids, data_ids;
  auto page_token = [](std::unordered_map<Gpn, std::uint32_t>& ids, Gpn gpn, std::uint32_t base) {
    auto [it, inserted] = ids.try_emplace(gpn, static_cast<std::uint32_t>(ids.size()));
    return it->second < token::kPagesPerKind ? base + it->second : token::kOov;
  };
  auto& out = seq.tokens;
  for (const TraceEvent& ev : trace.events) {
    if (const auto* cf = std::get_if<CodeFetch>(&ev)) {
      out.push_back(page_token(code_ids, cf->gpn, token::kCodeBase));
    } else if (const auto* da = std::get_if<DataAccess>(&ev)) {
      out.push_back(page_token(data_ids, da->gpn, token::kDataBase));
      for (std::uint8_t l : da->lines) out.push_back(token::kLineBase + l % kLinesPerPage);
    } else if (const auto* ci = std::get_if<CiphertextDiff>(&ev)) {
      out.push_back(token::kBlockBase + ci->block);
      out.push_back(token::kChanged);
    } else if (const auto* mk = std::get_if<Marker>(&ev)) {
      out.push_back(mk->kind == MarkerKind::kStart ? token::kMarkStart : token::kMarkStop);
    }
  }
  if (out.size() > max_len) out.erase(out.begin(), out.end() - static_cast<std::ptrdiff_t>(max_len));
  return seq;
}

void write_feature_csv(std::ostream& out, const std::vector<FeatureName>& schema,
                       const std::vector<std::vector<double>>& rows,
                       const std::vector<std::string>& labels) {
  if (!labels.empty() && labels.size() != rows.size()) {
    throw std::invalid_argument("write_feature_csv: labels and rows differ in length");
  }
  if (!labels.empty()) out << "label";
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (i > 0 || !labels.empty()) out << ',';
    out << schema[i].name;
  }
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != schema.size()) {
      throw std::invalid_argument("write_feature_csv: row width does not match schema");
    }
    if (!labels.empty()) out << labels[r];
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      if (i > 0 || !labels.empty()) out << ',';
      std::snprintf(buf, sizeof buf, "%.17g", rows[r][i]);
      out << buf;
    }
    out << '\n';
  }
}

void write_token_lines(std::ostream& out, const std::vector<TokenSequence>& sequences) {
  for (const TokenSequence& s : sequences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (i > 0) out << ' ';
      out << s.tokens[i];
    }
    out << '\n';
  }
}

}  // namespace leaklab
