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

#include "leaklab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "leaklab/parallel.hpp"
#include "leaklab/rng.hpp"

namespace leaklab {
namespace {

Eigen::MatrixXd take(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows,
                     const std::vector<Eigen::Index>& cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          x(static_cast<Eigen::Index>(rows[i]), cols[j]);
    }
  }
  return out;
}

std::vector<int> pick(const std::vector<int>& v, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(v[r]);
  return out;
}

void fill(SetResult& r, double baseline = 0.5) {
  std::vector<double> raw, norm;
  for (double a : r.accuracy) {
    raw.push_back(raw_advantage(a, baseline));
    norm.push_back(normalized_advantage(a, baseline));
  }
  r.test_accuracy = summarize(r.accuracy);
  r.raw_advantage = summarize(raw);
  r.normalized_advantage = summarize(norm);
}

void fill(GameAdvantage& g) {
  std::vector<double> raw, norm;
  for (double a : g.accuracy) {
    raw.push_back(raw_advantage(a, g.baseline));
    norm.push_back(normalized_advantage(a, g.baseline));
  }
  g.test_accuracy = summarize(g.accuracy);
  g.raw_advantage = summarize(raw);
  g.normalized_advantage = summarize(norm);
}

void require_two_per_class(const std::vector<int>& labels) {
  std::map<int, std::size_t> counts;
  for (int l : labels) ++counts[l];
  if (counts.size() < 2) throw std::invalid_argument("dataset has a single class");
  for (auto [label, n] : counts) {
    if (n < 2) {
      throw std::invalid_argument("dataset too small for the split: class " +
                                  std::to_string(label) + " has " + std::to_string(n) +
                                  " example(s)");
    }
  }
}

std::string fmt(double v, int digits = 6) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2",
                                    "#59a14f", "#edc948", "#b07aa1"};

}  // namespace

DpBound dp_bound(DpParams p) {
  if (!(p.eps >= 0) || !std::isfinite(p.eps)) throw std::invalid_argument("dp_bound: eps must be >= 0");
  if (!(p.delta >= 0 && p.delta < 1)) throw std::invalid_argument("dp_bound: delta must lie in [0, 1)");
  DpBound b;
  b.value = std::expm1(p.eps) / 4 + p.delta / 2;
  b.normalized = b.value / 0.5;
  b.useful = p.eps < std::log(3 - 2 * p.delta);
  return b;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

Split stratified_split(const std::vector<int>& labels, double split, std::uint64_t seed) {
  if (!(split > 0 && split < 1)) throw std::invalid_argument("split must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  Split out;
  for (auto& [label, idx] : by_class) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    auto n_train = static_cast<std::size_t>(std::llround(split * static_cast<double>(idx.size())));
    if (idx.size() >= 2) n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

FeatureTable build_feature_table(std::span<const Trace> traces, const std::vector<FeatureSet>& sets,
                                 const FeatureParams& params, unsigned jobs) {
  FeatureTable t;
  t.schema = feature_schema(sets, params);
  t.x.resize(static_cast<Eigen::Index>(traces.size()), static_cast<Eigen::Index>(t.schema.size()));
  std::vector<FeatureVector> rows(traces.size());
  parallel_for(traces.size(), jobs, [&](std::size_t i) {
    rows[i] = extract_features(traces[i], sets, params);
  });
  std::set<std::string> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].values.size(); ++j) {
      t.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].values[j];
    }
    if (rows[i].missing_channels) ++t.rows_missing_channels;
    for (auto& w : rows[i].warnings) {
      if (seen.insert(w).second) t.warnings.push_back(w);
    }
  }
  return t;
}

std::vector<Eigen::Index> columns_of(const std::vector<FeatureName>& schema,
                                     const std::vector<FeatureSet>& sets) {
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (std::find(sets.begin(), sets.end(), schema[j].set) != sets.end()) {
      cols.push_back(static_cast<Eigen::Index>(j));
    }
  }
  return cols;
}

const SetResult* AdvantageReport::find(std::string_view name) const {
  for (const auto& r : results) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

double AdvantageReport::sigma() const {
  return n_test == 0 ? 1.0 : 1.0 / std::sqrt(static_cast<double>(n_test));
}

AdvantageReport evaluate_advantage(const FeatureTable& table, const std::vector<int>& labels,
                                   const std::vector<FeatureSet>& sets, const EvalOptions& opts) {
  if (static_cast<std::size_t>(table.x.rows()) != labels.size()) {
    throw std::invalid_argument("feature rows and labels differ in length");
  }
  if (opts.trials < 1) throw std::invalid_argument("trials must be >= 1");
  require_two_per_class(labels);

  struct Group {
    std::string name;
    std::vector<Eigen::Index> cols;
  };
  std::vector<Group> groups;
  for (FeatureSet s : sets) {
    groups.push_back({std::string(feature_set_name(s)), columns_of(table.schema, {s})});
  }
  if (opts.include_union && sets.size() > 1) groups.push_back({"union", columns_of(table.schema, sets)});
  for (const auto& g : groups) {
    if (g.cols.empty()) throw std::invalid_argument("feature table has no columns for " + g.name);
  }

  std::vector<Split> splits;
  for (int t = 0; t < opts.trials; ++t) {
    splits.push_back(stratified_split(labels, opts.split, derive_seed(opts.seed, t, "split")));
  }

  const std::size_t n_tasks = groups.size() * static_cast<std::size_t>(opts.trials);
  std::vector<double> acc(n_tasks);
  parallel_for(n_tasks, opts.jobs, [&](std::size_t task) {
    const Group& g = groups[task / opts.trials];
    const Split& sp = splits[task % opts.trials];
    LogRegModel m = train_logreg(take(table.x, sp.train, g.cols), pick(labels, sp.train), opts.train);
    acc[task] = accuracy(m.predict(take(table.x, sp.test, g.cols)), pick(labels, sp.test));
  });

  AdvantageReport rep;
  rep.trials = opts.trials;
  rep.n_train = splits.front().train.size();
  rep.n_test = splits.front().test.size();
  rep.warnings = table.warnings;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    SetResult r;
    r.name = groups[gi].name;
    r.accuracy.assign(acc.begin() + static_cast<std::ptrdiff_t>(gi * opts.trials),
                      acc.begin() + static_cast<std::ptrdiff_t>((gi + 1) * opts.trials));
    fill(r);
    rep.results.push_back(std::move(r));
  }
  return rep;
}

double FingerprintReport::fingerprint_sigma() const {
  const double s = fingerprint.baseline;
  if (n_member_test == 0 || s >= 1) return 1.0;
  return std::sqrt(s * (1 - s) / static_cast<double>(n_member_test)) / (1 - s);
}

FingerprintReport fingerprint_advantage(const FeatureTable& table, const std::vector<int>& member,
                                        const std::vector<int>& identity, double s_c, double s_f,
                                        const std::vector<FeatureSet>& sets,
                                        const EvalOptions& opts) {
  const auto n = static_cast<std::size_t>(table.x.rows());
  if (member.size() != n || identity.size() != n) {
    throw std::invalid_argument("feature rows and labels differ in length");
  }
  if (std::none_of(member.begin(), member.end(), [](int m) { return m == 1; })) {
    throw std::invalid_argument("fingerprint dataset has no member examples");
  }
  require_two_per_class(member);
  const std::vector<Eigen::Index> cols = columns_of(table.schema, sets);
  if (cols.empty()) throw std::invalid_argument("feature table has no columns for the requested sets");

  FingerprintReport rep;
  rep.trials = opts.trials;
  rep.interest.baseline = s_c;
  rep.fingerprint.baseline = s_f;
  rep.interest.accuracy.resize(static_cast<std::size_t>(opts.trials));
  rep.fingerprint.accuracy.resize(static_cast<std::size_t>(opts.trials));
  std::vector<Split> splits;
  for (int t = 0; t < opts.trials; ++t) {
    splits.push_back(stratified_split(member, opts.split, derive_seed(opts.seed, t, "split")));
  }
  rep.n_test = splits.front().test.size();

  parallel_for(2 * static_cast<std::size_t>(opts.trials), opts.jobs, [&](std::size_t task) {
    const Split& sp = splits[task / 2];
    if (task % 2 == 0) {
      LogRegModel m = train_logreg(take(table.x, sp.train, cols), pick(member, sp.train), opts.train);
      rep.interest.accuracy[task / 2] =
          accuracy(m.predict(take(table.x, sp.test, cols)), pick(member, sp.test));
      return;
    }
    std::vector<std::size_t> tr, te;
    for (std::size_t i : sp.train) {
      if (member[i] == 1) tr.push_back(i);
    }
    for (std::size_t i : sp.test) {
      if (member[i] == 1) te.push_back(i);
    }
    SoftmaxModel m = train_softmax(take(table.x, tr, cols), pick(identity, tr), opts.train);
    rep.fingerprint.accuracy[task / 2] =
        te.empty() ? 0.0 : accuracy(m.predict(take(table.x, te, cols)), pick(identity, te));
  });
  for (std::size_t i : splits.front().test) rep.n_member_test += member[i] == 1;
  fill(rep.interest);
  fill(rep.fingerprint);
  return rep;
}

double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0, sign = 1;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_test: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  KsResult r;
  r.d = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    r.d = std::max(r.d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * r.d);
  return r;
}

std::vector<KsRow> ks_table(const FeatureTable& table, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(table.x.rows()) != labels.size()) {
    throw std::invalid_argument("feature rows and labels differ in length");
  }
  std::vector<KsRow> rows;
  for (std::size_t j = 0; j < table.schema.size(); ++j) {
    std::vector<double> s0, s1;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      (labels[i] == 0 ? s0 : s1)
          .push_back(table.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    KsRow row;
    row.feature = table.schema[j].name;
    row.ks = ks_test(s0, s1);
    row.mean0 = summarize(s0).mean;
    row.mean1 = summarize(s1).mean;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ks_csv(std::ostream& out, const std::vector<KsRow>& rows) {
  out << "feature,D,p_value,mean_0,mean_1\n";
  for (const auto& r : rows) {
    out << r.feature << ',' << fmt(r.ks.d, 10) << ',' << fmt(r.ks.p_value, 10) << ','
        << fmt(r.mean0, 10) << ',' << fmt(r.mean1, 10) << '\n';
  }
}

SparseRows ngram_features(std::span<const TokenSequence> sequences, const NgramParams& params) {
  if (params.max_n == 0 || params.log2_dims == 0 || params.log2_dims > 26) {
    throw std::invalid_argument("ngram_features: bad parameters");
  }
  const std::uint64_t mask = (std::uint64_t{1} << params.log2_dims) - 1;
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t r = 0; r < sequences.size(); ++r) {
    std::map<std::uint64_t, double> counts;
    const auto& tok = sequences[r].tokens;
    for (std::size_t i = 0; i < tok.size(); ++i) {
      for (unsigned n = 1; n <= params.max_n && i + n <= tok.size(); ++n) {
        std::string bytes(1, static_cast<char>(n));
        for (std::size_t k = i; k < i + n; ++k) {
          for (int sh = 0; sh < 32; sh += 8) bytes += static_cast<char>((tok[k] >> sh) & 0xff);
        }
        counts[fnv1a64(bytes) & mask] += 1;
      }
    }
    for (auto [col, c] : counts) {
      trip.emplace_back(static_cast<int>(r), static_cast<int>(col), std::log1p(c));
    }
  }
  SparseRows x(static_cast<Eigen::Index>(sequences.size()), static_cast<Eigen::Index>(mask + 1));
  x.setFromTriplets(trip.begin(), trip.end());
  return x;
}

std::vector<int> SeqModel::predict(std::span<const TokenSequence> sequences) const {
  return model.predict(ngram_features(sequences, params));
}

SeqModel train_seq_classifier(std::span<const TokenSequence> sequences, const std::vector<int>& labels,
                              const NgramParams& params, const TrainOptions& opts) {
  SeqModel m;
  m.params = params;
  m.model = train_logreg(ngram_features(sequences, params), labels, opts);
  return m;
}

SetResult evaluate_seq_advantage(std::span<const TokenSequence> sequences,
                                 const std::vector<int>& labels, const EvalOptions& opts,
                                 const NgramParams& params) {
  if (sequences.size() != labels.size()) {
    throw std::invalid_argument("sequences and labels differ in length");
  }
  require_two_per_class(labels);
  const SparseRows all = ngram_features(sequences, params);
  SetResult r;
  r.name = "seq";
  r.accuracy.resize(static_cast<std::size_t>(opts.trials));
  parallel_for(static_cast<std::size_t>(opts.trials), opts.jobs, [&](std::size_t t) {
    const Split sp = stratified_split(labels, opts.split, derive_seed(opts.seed, t, "split"));
    auto rows = [&](const std::vector<std::size_t>& idx) {
      SparseRows out(static_cast<Eigen::Index>(idx.size()), all.cols());
      std::vector<Eigen::Triplet<double>> trip;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (SparseRows::InnerIterator it(all, static_cast<Eigen::Index>(idx[i])); it; ++it) {
          trip.emplace_back(static_cast<int>(i), static_cast<int>(it.col()), it.value());
        }
      }
      out.setFromTriplets(trip.begin(), trip.end());
      return out;
    };
    LogRegModel m = train_logreg(rows(sp.train), pick(labels, sp.train), opts.train);
    r.accuracy[t] = accuracy(m.predict(rows(sp.test)), pick(labels, sp.test));
  });
  fill(r);
  return r;
}

nlohmann::ordered_json to_json(const DpBound& b, DpParams p) {
  nlohmann::ordered_json j;
  j["eps"] = p.eps;
  j["delta"] = p.delta;
  j["bound"] = b.value;
  j["normalized_bound"] = b.normalized;
  j["useful"] = b.useful;
  return j;
}

namespace {
nlohmann::ordered_json summary_json(const Summary& s) {
  return nlohmann::ordered_json{{"mean", s.mean}, {"std", s.std}};
}
}  // namespace

nlohmann::ordered_json to_json(const SetResult& r) {
  nlohmann::ordered_json j;
  j["feature_set"] = r.name;
  j["test_accuracy"] = summary_json(r.test_accuracy);
  j["raw_advantage"] = summary_json(r.raw_advantage);
  j["normalized_advantage"] = summary_json(r.normalized_advantage);
  j["per_trial_accuracy"] = r.accuracy;
  return j;
}

nlohmann::ordered_json to_json(const AdvantageReport& r) {
  nlohmann::ordered_json j;
  j["kind"] = "distinguish";
  j["trials"] = r.trials;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  j["sigma"] = r.sigma();
  j["results"] = nlohmann::ordered_json::array();
  for (const auto& s : r.results) j["results"].push_back(to_json(s));
  j["bound"] = nullptr;
  if (r.bound) {
    j["bound"] = {{"bound", r.bound->value},
                  {"normalized_bound", r.bound->normalized},
                  {"useful", r.bound->useful}};
  }
  j["warnings"] = r.warnings;
  return j;
}

nlohmann::ordered_json to_json(const FingerprintReport& r) {
  auto game = [](const GameAdvantage& g) {
    nlohmann::ordered_json j;
    j["baseline"] = g.baseline;
    j["test_accuracy"] = summary_json(g.test_accuracy);
    j["raw_advantage"] = summary_json(g.raw_advantage);
    j["normalized_advantage"] = summary_json(g.normalized_advantage);
    j["per_trial_accuracy"] = g.accuracy;
    return j;
  };
  nlohmann::ordered_json j;
  j["kind"] = "fingerprint";
  j["trials"] = r.trials;
  j["n_test"] = r.n_test;
  j["n_member_test"] = r.n_member_test;
  j["interest"] = game(r.interest);
  j["fingerprint"] = game(r.fingerprint);
  j["fingerprint_sigma"] = r.fingerprint_sigma();
  return j;
}

std::string advantage_bar_svg(const AdvantageReport& report, const std::string& title) {
  const int w = 640, h = 360, left = 60, bottom = 40, top = 40;
  const int plot_h = h - top - bottom;
  const std::size_t n = report.results.size();
  const double slot = n == 0 ? 0 : static_cast<double>(w - left - 20) / static_cast<double>(n);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">" << xml_escape(title) << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << w - 10 << "\" y2=\""
    << top + plot_h << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = top + plot_h * (1 - k / 4.0);
    s << "<text x=\"" << left - 6 << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">"
      << fmt(k / 4.0) << "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = report.results[i];
    const double v = std::clamp(r.normalized_advantage.mean, 0.0, 1.0);
    const double x = left + slot * (static_cast<double>(i) + 0.15);
    const double bh = plot_h * v;
    s << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(top + plot_h - bh) << "\" width=\""
      << fmt(slot * 0.7) << "\" height=\"" << fmt(bh) << "\" fill=\"" << kPalette[i % 7]
      << "\"/>\n";
    s << "<text x=\"" << fmt(x + slot * 0.35) << "\" y=\"" << top + plot_h + 16
      << "\" text-anchor=\"middle\">" << xml_escape(r.name) << "</text>\n";
  }
  if (report.bound) {
    const double y = top + plot_h * (1 - std::clamp(report.bound->normalized, 0.0, 1.0));
    s << "<line x1=\"" << left << "\" y1=\"" << fmt(y) << "\" x2=\"" << w - 10 << "\" y2=\""
      << fmt(y) << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string sweep_svg(const std::vector<SweepPoint>& points, const std::string& title) {
  const int w = 640, h = 400, left = 60, right = 120, top = 40, bottom = 40;
  const int pw = w - left - right, ph = h - top - bottom;
  double max_eps = 0;
  for (const auto& p : points) max_eps = std::max(max_eps, p.eps);
  if (max_eps <= 0) max_eps = 1;
  auto px = [&](double e) { return left + pw * e / max_eps; };
  auto py = [&](double v) { return top + ph * (1 - std::clamp(v, 0.0, 1.0)); };
  std::vector<std::string> names;
  for (const auto& p : points) {
    for (const auto& [name, v] : p.advantage) {
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
  }
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">" << xml_escape(title) << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\""
    << top + ph << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 8 << "\" text-anchor=\"middle\">epsilon</text>\n";
  auto polyline = [&](const std::vector<std::pair<double, double>>& pts, const char* color,
                      const char* dash) {
    s << "<polyline fill=\"none\" stroke=\"" << color << "\"" << dash << " points=\"";
    for (auto [e, v] : pts) s << fmt(px(e)) << ',' << fmt(py(v)) << ' ';
    s << "\"/>\n";
  };
  std::vector<std::pair<double, double>> bound;
  for (const auto& p : points) bound.emplace_back(p.eps, p.bound.normalized);
  polyline(bound, "black", " stroke-dasharray=\"4 3\"");
  s << "<text x=\"" << left + pw + 8 << "\" y=\"" << top + 12 << "\">bound</text>\n";
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::vector<std::pair<double, double>> line;
    for (const auto& p : points) {
      for (const auto& [name, v] : p.advantage) {
        if (name == names[k]) line.emplace_back(p.eps, v);
      }
    }
    polyline(line, kPalette[k % 7], "");
    s << "<text x=\"" << left + pw + 8 << "\" y=\"" << top + 28 + 16 * static_cast<int>(k)
      << "\" fill=\"" << kPalette[k % 7] << "\">" << xml_escape(names[k]) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  std::vector<std::string> names;
  for (const auto& p : points) {
    for (const auto& [name, v] : p.advantage) {
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
  }
  out << "eps,delta";
  for (const auto& n : names) out << ",adv_" << n;
  out << ",bound,normalized_bound,useful\n";
  for (const auto& p : points) {
    out << fmt(p.eps, 10) << ',' << fmt(p.delta, 10);
    for (const auto& n : names) {
      out << ',';
      for (const auto& [name, v] : p.advantage) {
        if (name == n) out << fmt(v, 10);
      }
    }
    out << ',' << fmt(p.bound.value, 10) << ',' << fmt(p.bound.normalized, 10) << ','
        << (p.bound.useful ? "true" : "false") << '\n';
  }
}

}  // namespace leaklab
