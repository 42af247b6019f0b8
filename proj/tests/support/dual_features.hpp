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

// Text-level feature extractor used as an oracle by the unit and acceptance
// tests.

#ifndef LEAKLAB_TESTS_SUPPORT_DUAL_FEATURES_HPP_
#define LEAKLAB_TESTS_SUPPORT_DUAL_FEATURES_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace leaklab::testing {

// Brute-force feature extractor over the text form. Shares nothing with
// extract_features beyond the line grammar.
inline std::vector<double> dual_extract(const std::string& text, unsigned bins = 10, unsigned m = 64) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string l;
  bool markers = false;
  std::string channels;
  bool channels_seen = false;
  while (std::getline(in, l)) {
    if (l.rfind("MARK", 0) == 0) markers = true;
    if (l.rfind("CHANNELS", 0) == 0) {
      channels_seen = true;
      channels = l.size() > 9 ? l.substr(9) : "";
    }
    lines.push_back(l);
  }
  auto has = [&](const std::string& c) {
    if (!channels_seen || channels.empty()) return true;
    return ("," + channels + ",").find("," + c + ",") != std::string::npos;
  };
  struct Ev {
    char kind;
    unsigned long long gpn;
    std::vector<int> items;
  };
  std::vector<Ev> ev;
  bool inside = false;
  for (const auto& s : lines) {
    if (s == "MARK START") inside = true;
    if (s == "MARK STOP") inside = false;
    if (markers && !inside) continue;
    std::istringstream ls(s);
    std::string tag, page;
    ls >> tag;
    if (tag != "CF" && tag != "MA" && tag != "CI") continue;
    ls >> page;
    Ev e{tag[1], std::stoull(page, nullptr, 16), {}};
    std::string kw, rest;
    if (ls >> kw >> rest) {
      std::stringstream items(rest);
      std::string tok;
      while (std::getline(items, tok, ',')) e.items.push_back(std::stoi(tok));
    }
    ev.push_back(e);
  }
  const bool cache = has("cache"), cipher = has("cipher");
  std::vector<double> out;

  // F1
  std::vector<unsigned long long> cfs, das;
  for (auto& e : ev) {
    if (e.kind == 'F') cfs.push_back(e.gpn);
    if (e.kind == 'A') das.push_back(e.gpn);
  }
  auto distinct = [](std::vector<unsigned long long> v) {
    std::sort(v.begin(), v.end());
    return static_cast<double>(std::unique(v.begin(), v.end()) - v.begin());
  };
  out.push_back(cfs.size());
  out.push_back(distinct(cfs));
  out.push_back(das.size());
  out.push_back(distinct(das));

  // F2
  double lt = 0, ct = 0;
  std::vector<unsigned long long> lu, cu;
  for (auto& e : ev) {
    if (e.kind == 'A') {
      lt += e.items.size();
      for (int x : e.items) lu.push_back(e.gpn * 1000 + x);
    }
    if (e.kind == 'I') {
      ct += 1;
      cu.push_back(e.gpn * 1000 + e.items.at(0));
    }
  }
  out.push_back(cache ? lt : 0);
  out.push_back(cache ? distinct(lu) : 0);
  out.push_back(cipher ? ct : 0);
  out.push_back(cipher ? distinct(cu) : 0);

  // F3
  for (int k = 0; k < 64; ++k) {
    double c = 0;
    for (auto& e : ev)
      if (e.kind == 'A') c += std::count(e.items.begin(), e.items.end(), k);
    out.push_back(cache ? c : 0);
  }
  for (int b = 0; b < 256; ++b) {
    double c = 0;
    for (auto& e : ev)
      if (e.kind == 'I' && e.items.at(0) == b) c += 1;
    out.push_back(cipher ? c : 0);
  }

  // F4
  auto stats = [&](const std::vector<long long>& v) {
    std::vector<double> r(11 + bins, 0.0);
    if (v.empty()) return r;
    long long lo = v[0], hi = v[0];
    for (auto x : v) lo = std::min(lo, x), hi = std::max(hi, x);
    r[0] = lo;
    r[1] = hi;
    const long long n = static_cast<long long>(v.size());
    for (int k = 1; k <= 9; ++k) {
      // smallest value with at least k/10 of the mass at or below it
      for (long long cand = lo; cand <= hi; ++cand) {
        long long below = std::count_if(v.begin(), v.end(), [&](long long x) { return x <= cand; });
        if (10 * below >= k * n) {
          r[1 + k] = cand;
          break;
        }
      }
    }
    for (auto x : v) {
      long long bin = hi == 0 ? 0 : std::min<long long>(bins - 1, x * bins / hi);
      r[11 + bin] += 1;
    }
    return r;
  };
  std::vector<long long> per_cf;
  for (auto& e : ev) {
    if (e.kind == 'F') per_cf.push_back(0);
    if (e.kind == 'A' && !per_cf.empty()) per_cf.back() += 1;
  }
  std::set<unsigned long long> data_pages;
  for (auto& e : ev)
    if (e.kind != 'F') data_pages.insert(e.gpn);
  std::vector<long long> f[4];
  for (auto p : data_pages) {
    long long a = 0, c = 0;
    std::set<int> ul, ub;
    for (auto& e : ev) {
      if (e.gpn != p) continue;
      if (e.kind == 'A') {
        a += e.items.size();
        ul.insert(e.items.begin(), e.items.end());
      }
      if (e.kind == 'I') {
        c += 1;
        ub.insert(e.items.at(0));
      }
    }
    f[0].push_back(a);
    f[1].push_back(ul.size());
    f[2].push_back(c);
    f[3].push_back(ub.size());
  }
  if (!cache) f[0].clear(), f[1].clear();
  if (!cipher) f[2].clear(), f[3].clear();
  for (const auto& fam : {per_cf, f[0], f[1], f[2], f[3]}) {
    auto r = stats(fam);
    out.insert(out.end(), r.begin(), r.end());
  }

  // F5
  for (char kind : {'F', 'A'}) {
    std::vector<unsigned long long> order;
    for (auto& e : ev)
      if (e.kind == kind && std::find(order.begin(), order.end(), e.gpn) == order.end())
        order.push_back(e.gpn);
    for (unsigned i = 0; i < m; ++i) {
      double c = 0;
      if (i < order.size())
        for (auto& e : ev) c += e.kind == kind && e.gpn == order[i];
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace leaklab::testing

#endif  // LEAKLAB_TESTS_SUPPORT_DUAL_FEATURES_HPP_
