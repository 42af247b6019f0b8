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

// Python bindings. Structured results cross the boundary as JSON text and
// are decoded by the package wrapper.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "leaklab/analysis.hpp"
#include "leaklab/features.hpp"
#include "leaklab/games.hpp"
#include "leaklab/mitigation.hpp"
#include "leaklab/parallel.hpp"
#include "leaklab/pipeline.hpp"
#include "leaklab/rng.hpp"
#include "leaklab/trace.hpp"

namespace py = pybind11;
using namespace leaklab;

namespace {

std::vector<FeatureSet> sets_of(const std::string& list) { return parse_feature_sets(list); }

std::string simulate(const std::string& config_json, const std::string& out_dir, int jobs) {
  GameConfig cfg = game_config_from_json(nlohmann::json::parse(config_json));
  if (jobs >= 0) cfg.jobs = jobs == 0 ? default_jobs() : static_cast<unsigned>(jobs);
  LabeledDataset ds;
  {
    py::gil_scoped_release release;
    ds = run_game(cfg);
  }
  std::size_t ones = 0;
  for (const auto& e : ds.entries) ones += e.label;
  if (!out_dir.empty()) write_dataset(ds, out_dir);
  nlohmann::ordered_json j;
  j["config_hash"] = ds.config_hash;
  j["runs"] = ds.entries.size();
  j["label_1"] = ones;
  j["s_c"] = ds.s_c;
  j["s_f"] = ds.s_f;
  return j.dump();
}

std::string analyze(const std::string& dataset_dir, const std::string& features, bool seq, int trials, double split,
                    std::uint64_t seed, int jobs) {
  AnalyzeOptions opts;
  opts.sets = sets_of(features);
  opts.seq = seq;
  opts.eval.trials = trials;
  opts.eval.split = split;
  opts.eval.seed = seed;
  opts.eval.jobs = jobs <= 0 ? default_jobs() : static_cast<unsigned>(jobs);
  LabeledDataset ds = read_dataset(dataset_dir);
  py::gil_scoped_release release;
  return analyze_dataset(ds, opts).report.dump();
}

std::string covert(std::size_t bytes, std::size_t reps, std::uint64_t seed) {
  CovertResult r;
  {
    py::gil_scoped_release release;
    r = run_covert(bytes, reps, seed);
  }
  nlohmann::ordered_json j;
  j["reps"] = r.reps.size();
  j["bytes"] = r.bytes_sent;
  j["byte_errors"] = r.byte_errors;
  j["error_rate"] = r.error_rate();
  j["faults_per_byte"] = r.faults_per_byte();
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "leaklab core: simulated controlled-channel leakage analysis";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<TraceParseError>(m, "TraceParseError", PyExc_ValueError);

  m.def(
      "dp_bound",
      [](double eps, double delta) { return to_json(dp_bound({eps, delta}), {eps, delta}).dump(); },
      py::arg("eps"), py::arg("delta"));
  m.def(
      "sample_dummy_counts",
      [](double eps, double delta, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<std::int64_t> out(n);
        for (auto& v : out) v = sample_dummy_count(eps, delta, rng);
        return out;
      },
      py::arg("eps"), py::arg("delta"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "verify_dummy_dp", [](double eps, double delta) { return verify_dummy_dp(eps, delta); }, py::arg("eps"),
      py::arg("delta"));

  m.def(
      "normalize_trace", [](const std::string& text) { return write_trace(parse_trace(text)); }, py::arg("text"));
  m.def(
      "feature_names",
      [](const std::string& features) {
        std::vector<std::string> names;
        for (const auto& f : feature_schema(sets_of(features), {})) names.push_back(f.name);
        return names;
      },
      py::arg("features") = "all");
  m.def(
      "extract_features",
      [](const std::string& text, const std::string& features) {
        return extract_features(parse_trace(text), sets_of(features), {}).values;
      },
      py::arg("text"), py::arg("features") = "all");
  m.def(
      "tokenize", [](const std::string& text) { return tokenize(parse_trace(text)).tokens; }, py::arg("text"));
  m.def(
      "ks_test",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        KsResult r = ks_test(a, b);
        return py::make_tuple(r.d, r.p_value);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "config_hash",
      [](const std::string& config_json) {
        return config_hash(game_config_from_json(nlohmann::json::parse(config_json)));
      },
      py::arg("config_json"));
  m.def("simulate", &simulate, py::arg("config_json"), py::arg("out_dir"), py::arg("jobs") = -1);
  m.def("analyze", &analyze, py::arg("dataset_dir"), py::arg("features") = "F1", py::arg("seq") = false,
        py::arg("trials") = 5, py::arg("split") = 0.8, py::arg("seed") = 0, py::arg("jobs") = 1);
  m.def("covert", &covert, py::arg("bytes") = 48, py::arg("reps") = 100, py::arg("seed") = 0);
}
