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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "leaklab/pipeline.hpp"

using namespace leaklab;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("leaklab_pipeline_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("covert run decodes every byte with five faults per byte") {
  CovertResult r = run_covert(48, 100, 0);
  CHECK(r.reps.size() == 100);
  CHECK(r.bytes_sent == 4800);
  CHECK(r.byte_errors == 0);
  CHECK(r.error_rate() == 0.0);
  CHECK(r.faults_per_byte() == 5.0);
  CHECK(r.ok());
}

TEST_CASE("covert empty message succeeds vacuously") {
  CovertResult r = run_covert(0, 3, 9);
  CHECK(r.bytes_sent == 0);
  CHECK(r.ok());
  CHECK(r.error_rate() == 0.0);
}

TEST_CASE("covert save and replay round trip; a corrupted block is reported at its position") {
  auto dir = temp_dir("covert");
  CovertResult r = run_covert(16, 2, 5);
  save_covert(r, dir);
  CovertResult back = replay_covert(dir);
  REQUIRE(back.reps.size() == 2);
  CHECK(back.ok());
  CHECK(back.reps[1].decoded == r.reps[1].sent);
  CHECK(back.faults_per_byte() == r.faults_per_byte());

  // Shift the block index of the fourth diff on the encoding page.
  Trace t = r.reps[0].trace;
  const Gpn enc = std::get<CiphertextDiff>(*std::find_if(t.events.begin(), t.events.end(), [](const auto& e) {
                    return std::holds_alternative<CiphertextDiff>(e);
                  })).gpn;
  int seen = 0;
  std::uint8_t wrong = 0;
  for (auto& e : t.events) {
    if (auto* ci = std::get_if<CiphertextDiff>(&e); ci && ci->gpn == enc && seen++ == 3) {
      ci->block = static_cast<std::uint8_t>(ci->block + 1);
      wrong = ci->block;
    }
  }
  CovertRep rep = decode_covert(t, r.reps[0].sent);
  REQUIRE(rep.wrong_positions.size() == 1);
  CHECK(rep.wrong_positions[0] == 3);
  CHECK(rep.decoded[3] == wrong);
  std::filesystem::remove_all(dir);
}

TEST_CASE("hex helpers") {
  CHECK(to_hex_bytes({0x00, 0x4a, 0xff}) == "004aff");
  CHECK(from_hex_bytes("004aFF") == std::vector<std::uint8_t>{0x00, 0x4a, 0xff});
  CHECK(from_hex_bytes("").empty());
  CHECK_THROWS(from_hex_bytes("abc"));
  CHECK_THROWS(from_hex_bytes("zz"));
}

TEST_CASE("analyze a small distinguishing dataset") {
  GameConfig cfg = game_config_from_json(json{
      {"game", "distinguish"},
      {"workload", {{"kind", "phh"}}},
      {"collector", {{"channels", {"page", "cache", "cipher"}}}},
      {"x0", "URL0"},
      {"x1", "URL1"},
      {"sybils", json::array({{{"kind", "fixed_copies"}, {"n", 9}, {"value", "URL0"}}})},
      {"traces_per_class", 20},
      {"seed", 3}});
  LabeledDataset ds = run_game(cfg);
  AnalyzeOptions opts;
  opts.sets = {FeatureSet::kF1, FeatureSet::kF2};
  opts.seq = true;
  opts.eval.trials = 2;
  AnalyzeResult res = analyze_dataset(ds, opts);
  REQUIRE(res.advantage);
  CHECK_FALSE(res.fingerprint);
  CHECK(res.report["schema"] == "leaklab-report/1");
  CHECK(res.report["config_hash"] == ds.config_hash);
  CHECK(res.report["runs"] == 40);
  CHECK(res.report["feature_sets"] == json::array({"F1", "F2"}));
  CHECK(res.advantage->find("F1") != nullptr);
  CHECK(res.advantage->find("union") != nullptr);
  CHECK(res.advantage->find("seq") != nullptr);
  CHECK(res.report["bound"].is_null());
  CHECK(res.table.x.rows() == 40);
  CHECK(res.table.x.cols() == 8);

  // Same options, same report.
  AnalyzeResult again = analyze_dataset(ds, opts);
  CHECK(again.report.dump() == res.report.dump());
}

TEST_CASE("sweep smoke") {
  SweepOptions opts;
  opts.eps_list = {0.1, 2.0};
  opts.base.traces_per_class = 10;
  opts.analyze.eval.trials = 1;
  std::vector<double> seen;
  auto steps = run_sweep(opts, [&](double eps, const LabeledDataset& ds) {
    seen.push_back(eps);
    CHECK(ds.entries.size() == 20);
  });
  REQUIRE(steps.size() == 2);
  CHECK(seen == std::vector<double>{0.1, 2.0});
  CHECK(steps[0].point.eps == 0.1);
  CHECK(steps[0].point.bound.useful);
  CHECK_FALSE(steps[1].point.bound.useful);
  CHECK(steps[0].config_hash != steps[1].config_hash);
  CHECK(steps[0].report.bound.has_value());
}
