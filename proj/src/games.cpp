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

#include "leaklab/games.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "leaklab/hashmap.hpp"
#include "leaklab/parallel.hpp"

namespace leaklab {

// ---------------------------------------------------------------------------
// Priors and the URL list.

PriorDistribution PriorDistribution::uniform_pair(std::string x0, std::string x1) {
  return explicit_table({std::move(x0), std::move(x1)}, {0.5, 0.5});
}

PriorDistribution PriorDistribution::power_law(std::vector<std::string> list, double s) {
  if (list.empty()) throw std::invalid_argument("power_law: empty list");
  if (!(s >= 0) || !std::isfinite(s)) throw std::invalid_argument("power_law: exponent must be >= 0");
  PriorDistribution w;
  w.support = std::move(list);
  w.probs.resize(w.support.size());
  for (std::size_t i = 0; i < w.probs.size(); ++i) w.probs[i] = std::pow(static_cast<double>(i + 1), -s);
  const double total = std::accumulate(w.probs.begin(), w.probs.end(), 0.0);
  for (double& p : w.probs) p /= total;
  return w;
}

PriorDistribution PriorDistribution::explicit_table(std::vector<std::string> support,
                                                    std::vector<double> probs) {
  if (support.empty() || support.size() != probs.size()) {
    throw std::invalid_argument("prior: support and probs must be non-empty and equally long");
  }
  double total = 0;
  for (double p : probs) {
    if (!(p >= 0) || !std::isfinite(p)) throw std::invalid_argument("prior: probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("prior: probabilities must sum to 1");
  std::set<std::string> seen(support.begin(), support.end());
  if (seen.size() != support.size()) throw std::invalid_argument("prior: support has duplicates");
  return PriorDistribution{std::move(support), std::move(probs)};
}

std::size_t PriorDistribution::sample_index(Rng& rng) const {
  double u = rng.uniform01();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (u < probs[i]) return i;
    u -= probs[i];
  }
  // Rounding left a sliver of mass past the end; give it to the last
  // element with nonzero probability.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0) return i;
  }
  return 0;
}

double PriorDistribution::mass(const std::vector<std::string>& subset) const {
  std::set<std::string> s(subset.begin(), subset.end());
  double m = 0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (s.count(support[i])) m += probs[i];
  }
  return m;
}

Baselines game_baselines(const PriorDistribution& w, const std::vector<std::string>& interest) {
  const double p_in = w.mass(interest);
  Baselines b;
  b.s_c = std::max(p_in, 1.0 - p_in);
  if (p_in > 0) {
    std::set<std::string> s(interest.begin(), interest.end());
    double best = 0;
    for (std::size_t i = 0; i < w.support.size(); ++i) {
      if (s.count(w.support[i])) best = std::max(best, w.probs[i]);
    }
    b.s_f = best / p_in;
  }
  return b;
}

namespace {

bool generic_tld(std::string_view host) {
  for (std::string_view t : {".com", ".net", ".org"}) {
    if (host.size() >= t.size() && host.substr(host.size() - t.size()) == t) return true;
  }
  return false;
}

std::vector<std::string> make_url_list() {
  static constexpr const char* kSyl[] = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "xe", "zu"};
  static constexpr const char* kCc[] = {"de", "jp", "co.uk", "fr", "it", "nl", "ru", "br", "in", "cn",
                                        "au", "ca", "es", "se", "ch", "pl", "kr", "co.jp", "mx", "be"};
  std::vector<std::string> out;
  out.reserve(1000);
  std::size_t cc = 0;
  for (int r = 0; r < 1000; ++r) {
    // Country-code entries are spread evenly over the ranks: 301 of 1000.
    const bool country = (r + 1) * 301 / 1000 > r * 301 / 1000;
    std::string tld;
    if (country) {
      tld = kCc[cc++ % 20];
    } else {
      tld = r % 5 < 3 ? "com" : r % 5 == 3 ? "net" : "org";
    }
    char rank[8];
    std::snprintf(rank, sizeof rank, "%04d", r);
    out.push_back(std::string("site") + rank + "-" + kSyl[r / 100 % 10] + kSyl[r / 10 % 10] +
                  kSyl[r % 10] + "." + tld);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& bundled_url_list() {
  static const std::vector<std::string> list = make_url_list();
  return list;
}

std::vector<std::string> bundled_cctld_entries() {
  std::vector<std::string> out;
  for (const auto& h : bundled_url_list()) {
    if (!generic_tld(h)) out.push_back(h);
  }
  return out;
}

bool is_valid_hostname(std::string_view host) {
  if (host.empty() || host.size() > 253) return false;
  std::size_t start = 0;
  int labels = 0;
  while (start <= host.size()) {
    std::size_t dot = host.find('.', start);
    if (dot == std::string_view::npos) dot = host.size();
    std::string_view label = host.substr(start, dot - start);
    if (label.empty() || label.size() > 63 || label.front() == '-' || label.back() == '-') return false;
    for (char c : label) {
      if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
            c == '-')) {
        return false;
      }
    }
    ++labels;
    start = dot + 1;
  }
  return labels >= 2;
}

// ---------------------------------------------------------------------------
// Config.

std::size_t GameConfig::total_runs() const {
  return game == GameKind::kDistinguish ? 2 * traces_per_class : traces;
}

namespace {

bool parse_index(const std::string& s, std::size_t& out) {
  if (s.empty() || s.size() > 18) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  out = std::stoull(s);
  return true;
}

const char* game_name(GameKind g) { return g == GameKind::kDistinguish ? "distinguish" : "fingerprint"; }

const char* pir_mode_name(PirMode m) {
  switch (m) {
    case PirMode::kNaive: return "naive";
    case PirMode::kScan: return "scan";
    case PirMode::kOram: return "oram";
  }
  return "scan";
}

const char* sybil_kind_name(SybilSpec::Kind k) {
  switch (k) {
    case SybilSpec::Kind::kFixedCopies: return "fixed_copies";
    case SybilSpec::Kind::kOneOfEach: return "one_of_each";
    case SybilSpec::Kind::kOutOfDomainFill: return "out_of_domain_fill";
    case SybilSpec::Kind::kRehashForcer: return "rehash_forcer";
  }
  return "";
}

}  // namespace

void GameConfig::validate() const {
  try {
    policy.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("/collector", e.what());
  }
  if (workload.kind == WorkloadConfig::Kind::kPhh) {
    try {
      workload.phh.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("/workload", e.what());
    }
  } else {
    if (workload.db_size < 2) throw ConfigError("/workload/db_size", "must be >= 2");
    if (!(workload.zero_fraction >= 0 && workload.zero_fraction <= 1)) {
      throw ConfigError("/workload/zero_fraction", "must lie in [0, 1]");
    }
    if (!sybils.empty()) throw ConfigError("/sybils", "Sybil inputs only apply to the phh workload");
  }
  if (game == GameKind::kDistinguish) {
    if (traces_per_class < 10) throw ConfigError("/traces_per_class", "must be >= 10");
    if (x0.empty()) throw ConfigError("/x0", "required for the distinguishing game");
    if (x1.empty()) throw ConfigError("/x1", "required for the distinguishing game");
    if (workload.kind == WorkloadConfig::Kind::kPir && workload.pir_mode != PirMode::kNaive) {
      std::size_t idx = 0;
      for (const auto& [ptr, x] : {std::pair{"/x0", &x0}, std::pair{"/x1", &x1}}) {
        if (!parse_index(*x, idx) || idx >= workload.db_size) {
          throw ConfigError(ptr, "must be a record index below db_size");
        }
      }
    }
  } else {
    if (workload.kind != WorkloadConfig::Kind::kPhh) {
      throw ConfigError("/workload/kind", "the fingerprinting game runs on the phh workload");
    }
    if (traces < 10) throw ConfigError("/traces", "must be >= 10");
    if (prior.support.empty()) throw ConfigError("/prior", "required for the fingerprinting game");
    if (interest.size() < 2) throw ConfigError("/interest", "needs at least two elements");
    std::set<std::string> sup(prior.support.begin(), prior.support.end());
    for (std::size_t i = 0; i < interest.size(); ++i) {
      if (!sup.count(interest[i])) {
        throw ConfigError("/interest/" + std::to_string(i), "'" + interest[i] + "' is not in the prior's support");
      }
    }
  }
  for (std::size_t i = 0; i < sybils.size(); ++i) {
    const auto& s = sybils[i];
    const std::string ptr = "/sybils/" + std::to_string(i);
    if (s.kind == SybilSpec::Kind::kFixedCopies && s.value.empty()) {
      throw ConfigError(ptr + "/value", "required for fixed_copies");
    }
    if (s.kind == SybilSpec::Kind::kOneOfEach && interest.empty()) {
      throw ConfigError(ptr, "one_of_each needs an interest set");
    }
  }
}

namespace {

using json = nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string ptr, std::set<std::string> allowed) : j_(j), ptr_(std::move(ptr)) {
    if (!j.is_object()) throw ConfigError(ptr_, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!allowed.count(it.key())) throw ConfigError(ptr_ + "/" + it.key(), "unknown field");
    }
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  const json& raw(const std::string& k) const { return j_.at(k); }
  std::string at(const std::string& k) const { return ptr_ + "/" + k; }

  std::string str(const std::string& k, std::string def) const {
    if (!has(k)) return def;
    if (!j_[k].is_string()) throw ConfigError(at(k), "expected a string");
    return j_[k].get<std::string>();
  }
  std::string required_str(const std::string& k) const {
    if (!has(k)) throw ConfigError(at(k), "required field missing");
    return str(k, "");
  }
  double num(const std::string& k, double def) const {
    if (!has(k)) return def;
    if (!j_[k].is_number()) throw ConfigError(at(k), "expected a number");
    return j_[k].get<double>();
  }
  std::uint64_t uint(const std::string& k, std::uint64_t def) const {
    if (!has(k)) return def;
    if (!j_[k].is_number_unsigned() && !(j_[k].is_number_integer() && j_[k].get<std::int64_t>() >= 0)) {
      throw ConfigError(at(k), "expected a non-negative integer");
    }
    return j_[k].get<std::uint64_t>();
  }
  bool boolean(const std::string& k, bool def) const {
    if (!has(k)) return def;
    if (!j_[k].is_boolean()) throw ConfigError(at(k), "expected a boolean");
    return j_[k].get<bool>();
  }
  std::vector<std::string> strings(const std::string& k) const {
    const json& a = j_.at(k);
    if (!a.is_array()) throw ConfigError(at(k), "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_string()) throw ConfigError(at(k) + "/" + std::to_string(i), "expected a string");
      out.push_back(a[i].get<std::string>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string ptr_;
};

std::vector<std::string> list_from(const Reader& r, const std::string& key) {
  if (r.has(key) && r.raw(key).is_string()) {
    if (r.raw(key).get<std::string>() == "bundled") return bundled_url_list();
    throw ConfigError(r.at(key), "expected \"bundled\" or an array of strings");
  }
  return r.strings(key);
}

PriorDistribution prior_from_json(const json& j, const std::string& ptr) {
  Reader r(j, ptr, {"kind", "x0", "x1", "list", "exponent", "support", "probs"});
  const std::string kind = r.required_str("kind");
  try {
    if (kind == "uniform_pair") return PriorDistribution::uniform_pair(r.required_str("x0"), r.required_str("x1"));
    if (kind == "power_law") {
      return PriorDistribution::power_law(r.has("list") ? list_from(r, "list") : bundled_url_list(),
                                          r.num("exponent", 0.5));
    }
    if (kind == "explicit") {
      if (!r.has("support") || !r.has("probs")) throw ConfigError(ptr, "explicit prior needs support and probs");
      std::vector<double> probs;
      const json& p = r.raw("probs");
      if (!p.is_array()) throw ConfigError(r.at("probs"), "expected an array of numbers");
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p[i].is_number()) throw ConfigError(r.at("probs") + "/" + std::to_string(i), "expected a number");
        probs.push_back(p[i].get<double>());
      }
      return PriorDistribution::explicit_table(r.strings("support"), std::move(probs));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ptr, e.what());
  }
  throw ConfigError(r.at("kind"), "unknown prior kind '" + kind + "'");
}

WorkloadConfig workload_from_json(const json& j) {
  Reader r(j, "/workload",
           {"kind", "eps", "delta", "mitigated", "markers", "prime_ladder", "mode", "db_size", "db_seed",
            "zero_fraction", "oram_flaw", "stash_bound"});
  WorkloadConfig w;
  const std::string kind = r.required_str("kind");
  if (kind == "phh") {
    w.kind = WorkloadConfig::Kind::kPhh;
    w.phh.eps = r.num("eps", w.phh.eps);
    w.phh.delta = r.num("delta", w.phh.delta);
    w.phh.mitigated = r.boolean("mitigated", false);
    try {
      w.phh.markers = phh_markers_from_name(r.str("markers", "none"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(r.at("markers"), e.what());
    }
    if (r.has("prime_ladder")) {
      const json& a = r.raw("prime_ladder");
      if (!a.is_array() || a.empty()) throw ConfigError(r.at("prime_ladder"), "expected a non-empty array");
      w.phh.prime_ladder.clear();
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number_unsigned() || a[i].get<std::uint64_t>() < 2) {
          throw ConfigError(r.at("prime_ladder") + "/" + std::to_string(i), "expected an integer >= 2");
        }
        w.phh.prime_ladder.push_back(a[i].get<std::uint64_t>());
      }
      if (!std::is_sorted(w.phh.prime_ladder.begin(), w.phh.prime_ladder.end()) ||
          std::adjacent_find(w.phh.prime_ladder.begin(), w.phh.prime_ladder.end()) != w.phh.prime_ladder.end()) {
        throw ConfigError(r.at("prime_ladder"), "must be strictly increasing");
      }
    }
  } else if (kind == "pir") {
    w.kind = WorkloadConfig::Kind::kPir;
    const std::string mode = r.str("mode", "scan");
    if (mode == "naive") w.pir_mode = PirMode::kNaive;
    else if (mode == "scan") w.pir_mode = PirMode::kScan;
    else if (mode == "oram") w.pir_mode = PirMode::kOram;
    else throw ConfigError(r.at("mode"), "unknown pir mode '" + mode + "'");
    w.db_size = r.uint("db_size", w.db_size);
    w.db_seed = r.uint("db_seed", w.db_seed);
    w.zero_fraction = r.num("zero_fraction", 0.0);
    w.oram_flaw = r.boolean("oram_flaw", false);
    w.stash_bound = r.uint("stash_bound", 100);
  } else {
    throw ConfigError(r.at("kind"), "unknown workload kind '" + kind + "'");
  }
  return w;
}

std::vector<SybilSpec> sybils_from_json(const json& a) {
  if (!a.is_array()) throw ConfigError("/sybils", "expected an array");
  std::vector<SybilSpec> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string ptr = "/sybils/" + std::to_string(i);
    Reader r(a[i], ptr, {"kind", "n", "value"});
    const std::string kind = r.required_str("kind");
    SybilSpec s{};
    if (kind == "fixed_copies") {
      s.kind = SybilSpec::Kind::kFixedCopies;
      s.n = r.uint("n", 0);
      s.value = r.required_str("value");
    } else if (kind == "one_of_each") {
      s.kind = SybilSpec::Kind::kOneOfEach;
    } else if (kind == "out_of_domain_fill") {
      s.kind = SybilSpec::Kind::kOutOfDomainFill;
      s.n = r.uint("n", 0);
    } else if (kind == "rehash_forcer") {
      s.kind = SybilSpec::Kind::kRehashForcer;
    } else {
      throw ConfigError(r.at("kind"), "unknown sybil strategy '" + kind + "'");
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

CollectorPolicy policy_from_json(const nlohmann::json& j, const std::string& pointer) {
  Reader r(j, pointer,
           {"channels", "data_queue_len", "skip_unencrypted", "skip_reserved", "targeted", "cache_noise", "rng_seed"});
  CollectorPolicy p;
  if (r.has("channels")) {
    const json& c = r.raw("channels");
    try {
      if (c.is_string()) {
        p.channels = ChannelSet::parse(c.get<std::string>());
      } else if (c.is_array()) {
        p.channels = ChannelSet{};
        for (std::size_t i = 0; i < c.size(); ++i) {
          if (!c[i].is_string()) throw ConfigError(r.at("channels") + "/" + std::to_string(i), "expected a string");
          p.channels.insert(channel_from_name(c[i].get<std::string>()));
        }
      } else {
        throw ConfigError(r.at("channels"), "expected an array of channel names");
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(r.at("channels"), e.what());
    }
  }
  const std::uint64_t q = r.uint("data_queue_len", 4);
  if (q < 1 || q > 1u << 20) throw ConfigError(r.at("data_queue_len"), "must be in [1, 2^20]");
  p.data_queue_len = static_cast<int>(q);
  p.skip_unencrypted = r.boolean("skip_unencrypted", true);
  p.skip_reserved = r.boolean("skip_reserved", true);
  p.targeted = r.boolean("targeted", false);
  p.rng_seed = r.uint("rng_seed", 0);
  if (r.has("cache_noise")) {
    Reader n(r.raw("cache_noise"), r.at("cache_noise"), {"drop_prob", "flip_prob"});
    p.cache_noise.drop_prob = n.num("drop_prob", 0.0);
    p.cache_noise.flip_prob = n.num("flip_prob", 0.0);
  }
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(pointer, e.what());
  }
  return p;
}

nlohmann::ordered_json to_json(const CollectorPolicy& p) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json ch = nlohmann::ordered_json::array();
  for (Channel c : {Channel::kPage, Channel::kCache, Channel::kCipher, Channel::kPmc}) {
    if (p.channels.contains(c)) ch.push_back(std::string(channel_name(c)));
  }
  j["channels"] = ch;
  j["data_queue_len"] = p.data_queue_len;
  j["skip_unencrypted"] = p.skip_unencrypted;
  j["skip_reserved"] = p.skip_reserved;
  j["targeted"] = p.targeted;
  j["cache_noise"] = {{"drop_prob", p.cache_noise.drop_prob}, {"flip_prob", p.cache_noise.flip_prob}};
  j["rng_seed"] = p.rng_seed;
  return j;
}

GameConfig game_config_from_json(const nlohmann::json& j) {
  Reader r(j, "", {"game", "workload", "collector", "x0", "x1", "prior", "interest", "sybils",
                   "traces_per_class", "traces", "seed", "jobs"});
  GameConfig c;
  const std::string game = r.required_str("game");
  if (game == "distinguish") c.game = GameKind::kDistinguish;
  else if (game == "fingerprint") c.game = GameKind::kFingerprint;
  else throw ConfigError("/game", "unknown game '" + game + "'");
  if (!r.has("workload")) throw ConfigError("/workload", "required field missing");
  c.workload = workload_from_json(r.raw("workload"));
  if (r.has("collector")) c.policy = policy_from_json(r.raw("collector"));
  c.x0 = r.str("x0", "");
  c.x1 = r.str("x1", "");
  if (r.has("prior")) c.prior = prior_from_json(r.raw("prior"), "/prior");
  if (r.has("interest")) {
    const json& i = r.raw("interest");
    if (i.is_string()) {
      if (i.get<std::string>() != "cctld") throw ConfigError("/interest", "expected \"cctld\" or an array");
      c.interest = bundled_cctld_entries();
    } else {
      c.interest = r.strings("interest");
    }
  }
  if (r.has("sybils")) c.sybils = sybils_from_json(r.raw("sybils"));
  c.traces_per_class = r.uint("traces_per_class", c.traces_per_class);
  c.traces = r.uint("traces", c.traces);
  c.base_seed = r.uint("seed", 0);
  c.jobs = static_cast<unsigned>(r.uint("jobs", 1));
  c.validate();
  return c;
}

nlohmann::ordered_json to_json(const GameConfig& c) {
  nlohmann::ordered_json j;
  j["game"] = game_name(c.game);
  nlohmann::ordered_json w;
  if (c.workload.kind == WorkloadConfig::Kind::kPhh) {
    w["kind"] = "phh";
    w["eps"] = c.workload.phh.eps;
    w["delta"] = c.workload.phh.delta;
    w["mitigated"] = c.workload.phh.mitigated;
    w["markers"] = std::string(phh_markers_name(c.workload.phh.markers));
    w["prime_ladder"] = c.workload.phh.prime_ladder;
  } else {
    w["kind"] = "pir";
    w["mode"] = pir_mode_name(c.workload.pir_mode);
    w["db_size"] = c.workload.db_size;
    w["db_seed"] = c.workload.db_seed;
    w["zero_fraction"] = c.workload.zero_fraction;
    w["oram_flaw"] = c.workload.oram_flaw;
    w["stash_bound"] = c.workload.stash_bound;
  }
  j["workload"] = w;
  j["collector"] = to_json(c.policy);
  if (c.game == GameKind::kDistinguish) {
    j["x0"] = c.x0;
    j["x1"] = c.x1;
    j["traces_per_class"] = c.traces_per_class;
  } else {
    j["prior"] = {{"kind", "explicit"}, {"support", c.prior.support}, {"probs", c.prior.probs}};
    j["interest"] = c.interest;
    j["traces"] = c.traces;
  }
  nlohmann::ordered_json s = nlohmann::ordered_json::array();
  for (const auto& sy : c.sybils) {
    nlohmann::ordered_json e;
    e["kind"] = sybil_kind_name(sy.kind);
    if (sy.kind == SybilSpec::Kind::kFixedCopies || sy.kind == SybilSpec::Kind::kOutOfDomainFill) e["n"] = sy.n;
    if (sy.kind == SybilSpec::Kind::kFixedCopies) e["value"] = sy.value;
    s.push_back(e);
  }
  j["sybils"] = s;
  j["seed"] = c.base_seed;
  return j;
}

std::string config_hash(const GameConfig& cfg) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
  return buf;
}

GameConfig load_game_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  if (const char* env = std::getenv("LEAKLAB_SEED"); env != nullptr && *env != '\0') {
    std::size_t idx = 0;
    if (!parse_index(env, idx)) throw ConfigError("/seed", "LEAKLAB_SEED must be a non-negative integer");
    if (!j.is_object()) throw ConfigError("", "expected an object");
    j["seed"] = static_cast<std::uint64_t>(idx);
  }
  return game_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Runs.

std::vector<std::string> sybil_inputs(const GameConfig& cfg) {
  std::vector<std::string> out;
  std::set<std::string> distinct;
  auto add = [&](const std::string& s) {
    out.push_back(s);
    distinct.insert(s);
  };
  std::size_t filler = 0;
  for (std::size_t i = 0; i < cfg.sybils.size(); ++i) {
    const SybilSpec& s = cfg.sybils[i];
    switch (s.kind) {
      case SybilSpec::Kind::kFixedCopies:
        for (std::size_t k = 0; k < s.n; ++k) add(s.value);
        break;
      case SybilSpec::Kind::kOneOfEach:
        for (const auto& x : cfg.interest) add(x);
        break;
      case SybilSpec::Kind::kOutOfDomainFill:
        for (std::size_t k = 0; k < s.n; ++k) add(std::string(kFillerPrefix) + std::to_string(filler++));
        break;
      case SybilSpec::Kind::kRehashForcer: {
        // Fill the table to exactly its bucket count: the next new key then
        // triggers a rehash, while a repeat of a present key does not.
        const auto& ladder = cfg.workload.phh.prime_ladder;
        auto rung = std::lower_bound(ladder.begin(), ladder.end(), distinct.size());
        if (rung == ladder.end()) {
          throw ConfigError("/sybils/" + std::to_string(i),
                            "rehash_forcer cannot be sized: " + std::to_string(distinct.size()) +
                                " distinct Sybil keys exceed the largest prime ladder rung");
        }
        while (distinct.size() < *rung) add(std::string(kFillerPrefix) + std::to_string(filler++));
        break;
      }
    }
  }
  return out;
}

RunResult execute_run(const GameConfig& cfg, const std::vector<std::string>& sybils,
                      const std::string& input, std::uint64_t run_seed) {
  CollectorPolicy policy = cfg.policy;
  policy.rng_seed = derive_seed(run_seed, 0, "noise");
  SimMachine machine(derive_seed(run_seed, 0, "cipher"));
  const std::uint64_t wl_seed = derive_seed(run_seed, 0, "workload");
  RunResult out;
  if (cfg.workload.kind == WorkloadConfig::Kind::kPhh) {
    std::vector<std::string> inputs = sybils;
    inputs.push_back(input);
    PhhWorkload w(std::move(inputs), cfg.workload.phh, wl_seed);
    auto r = run_collect(machine, w, policy, run_seed);
    out.trace = std::move(r.trace);
    out.rehashes = r.output.rehashes;
    return out;
  }
  const PirDatabase db = make_pir_database(cfg.workload.db_size, cfg.workload.db_seed, cfg.workload.zero_fraction);
  std::size_t idx = 0;
  const bool numeric = parse_index(input, idx);
  switch (cfg.workload.pir_mode) {
    case PirMode::kNaive: {
      NaiveLookupWorkload w(db, numeric && idx < db.keys.size() ? db.keys[idx] : input);
      out.trace = run_collect(machine, w, policy, run_seed).trace;
      break;
    }
    case PirMode::kScan: {
      LinearScanWorkload w(db.values, idx);
      out.trace = run_collect(machine, w, policy, run_seed).trace;
      break;
    }
    case PirMode::kOram: {
      OramWorkload w(db.values, idx, cfg.workload.oram_flaw, wl_seed, cfg.workload.stash_bound);
      out.trace = run_collect(machine, w, policy, run_seed).trace;
      break;
    }
  }
  return out;
}

std::vector<DatasetEntry> plan_runs(const GameConfig& cfg) {
  cfg.validate();
  std::vector<DatasetEntry> plan(cfg.total_runs());
  if (cfg.game == GameKind::kDistinguish) {
    // Balanced labels in a seeded order.
    std::vector<int> labels(plan.size(), 0);
    std::fill(labels.begin() + static_cast<std::ptrdiff_t>(cfg.traces_per_class), labels.end(), 1);
    Rng rng(derive_seed(cfg.base_seed, 0, "labels"));
    for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng.below(i)]);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      plan[i].run = i;
      plan[i].label = labels[i];
      plan[i].input = labels[i] ? cfg.x1 : cfg.x0;
      plan[i].seed = derive_seed(cfg.base_seed, i, "run");
    }
    return plan;
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    plan[i].run = i;
    plan[i].seed = derive_seed(cfg.base_seed, i, "run");
    Rng rng(derive_seed(plan[i].seed, 0, "input"));
    plan[i].input = cfg.prior.support[cfg.prior.sample_index(rng)];
    auto it = std::find(cfg.interest.begin(), cfg.interest.end(), plan[i].input);
    plan[i].label = it != cfg.interest.end();
    plan[i].identity = plan[i].label ? static_cast<int>(it - cfg.interest.begin()) : -1;
  }
  return plan;
}

namespace {

LabeledDataset run_planned(const GameConfig& cfg) {
  LabeledDataset ds;
  ds.config = cfg;
  ds.config_hash = config_hash(cfg);
  ds.entries = plan_runs(cfg);
  const std::vector<std::string> sybils = sybil_inputs(cfg);
  ds.traces.resize(ds.entries.size());
  parallel_for(ds.entries.size(), cfg.jobs == 0 ? default_jobs() : cfg.jobs, [&](std::size_t i) {
    DatasetEntry& e = ds.entries[i];
    try {
      RunResult r = execute_run(cfg, sybils, e.input, e.seed);
      ds.traces[i] = std::move(r.trace);
      e.rehashes = r.rehashes;
    } catch (const std::exception& ex) {
      throw std::runtime_error("run " + std::to_string(i) + " (input '" + e.input + "', seed " +
                               std::to_string(e.seed) + ") failed: " + ex.what());
    }
  });
  if (cfg.game == GameKind::kFingerprint) {
    Baselines b = game_baselines(cfg.prior, cfg.interest);
    ds.s_c = b.s_c;
    ds.s_f = b.s_f;
  }
  return ds;
}

}  // namespace

LabeledDataset run_distinguishing_game(const GameConfig& cfg) {
  if (cfg.game != GameKind::kDistinguish) throw ConfigError("/game", "expected a distinguish config");
  return run_planned(cfg);
}

LabeledDataset run_fingerprinting_game(const GameConfig& cfg) {
  if (cfg.game != GameKind::kFingerprint) throw ConfigError("/game", "expected a fingerprint config");
  return run_planned(cfg);
}

LabeledDataset run_game(const GameConfig& cfg) { return run_planned(cfg); }

std::vector<int> LabeledDataset::labels() const {
  std::vector<int> out;
  for (const auto& e : entries) out.push_back(e.label);
  return out;
}

std::vector<int> LabeledDataset::identities() const {
  std::vector<int> out;
  for (const auto& e : entries) out.push_back(e.identity);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset files.

namespace {

std::string trace_file_name(std::size_t run) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "traces/run_%06zu.trace", run);
  return buf;
}

}  // namespace

void write_dataset(const LabeledDataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "traces");
  std::ofstream manifest(dir / "manifest.jsonl", std::ios::binary);
  if (!manifest) throw std::runtime_error("cannot write " + (dir / "manifest.jsonl").string());
  for (std::size_t i = 0; i < ds.entries.size(); ++i) {
    const DatasetEntry& e = ds.entries[i];
    const std::string file = trace_file_name(e.run);
    write_trace_file((dir / file).string(), ds.traces[i]);
    nlohmann::ordered_json m;
    m["run"] = e.run;
    m["file"] = file;
    m["label"] = e.label;
    m["identity"] = e.identity;
    m["input"] = e.input;
    m["seed"] = e.seed;
    m["rehashes"] = e.rehashes;
    manifest << m.dump() << '\n';
  }
  nlohmann::ordered_json meta;
  meta["format"] = "leaklab-dataset/1";
  meta["game"] = game_name(ds.config.game);
  meta["config_hash"] = ds.config_hash;
  meta["runs"] = ds.entries.size();
  meta["s_c"] = ds.s_c;
  meta["s_f"] = ds.s_f;
  meta["config"] = to_json(ds.config);
  std::ofstream out(dir / "dataset.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / "dataset.json").string());
  out << meta.dump(2) << '\n';
}

LabeledDataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "dataset.json");
  if (!in) throw std::runtime_error("not a dataset directory (no dataset.json): " + dir.string());
  json meta = json::parse(in);
  LabeledDataset ds;
  ds.config = game_config_from_json(meta.at("config"));
  ds.config_hash = meta.at("config_hash").get<std::string>();
  ds.s_c = meta.value("s_c", 0.0);
  ds.s_f = meta.value("s_f", 0.0);
  std::ifstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw std::runtime_error("missing manifest.jsonl in " + dir.string());
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    json m = json::parse(line);
    DatasetEntry e;
    e.run = m.at("run").get<std::size_t>();
    e.label = m.at("label").get<int>();
    e.identity = m.value("identity", -1);
    e.input = m.value("input", "");
    e.seed = m.at("seed").get<std::uint64_t>();
    e.rehashes = m.value("rehashes", std::uint64_t{0});
    ds.traces.push_back(read_trace_file((dir / m.at("file").get<std::string>()).string()));
    ds.entries.push_back(std::move(e));
  }
  if (ds.entries.size() != meta.at("runs").get<std::size_t>()) {
    throw std::runtime_error("manifest lists " + std::to_string(ds.entries.size()) + " runs, dataset.json says " +
                             meta.at("runs").dump());
  }
  return ds;
}

}  // namespace leaklab
