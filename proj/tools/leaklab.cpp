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

// leaklab: command-line front end.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "leaklab/analysis.hpp"
#include "leaklab/features.hpp"
#include "leaklab/games.hpp"
#include "leaklab/parallel.hpp"
#include "leaklab/pipeline.hpp"
#include "leaklab/rng.hpp"

namespace fs = std::filesystem;
using namespace leaklab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitCovert = 4;

// Invalid user input that is not tied to a config document.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// FNV-1a over the manifest and every trace file, in run order.
std::string dataset_digest(const fs::path& dir, const LabeledDataset& ds) {
  std::uint64_t h = fnv1a64(read_file(dir / "manifest.jsonl"));
  for (const auto& e : ds.entries) {
    char name[40];
    std::snprintf(name, sizeof name, "traces/run_%06zu.trace", e.run);
    h = fnv1a64(read_file(dir / name), h);
  }
  return hex64(h);
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

std::vector<FeatureSet> parse_sets(const std::string& list) {
  try {
    return parse_feature_sets(list);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--features: ") + e.what());
  }
}

unsigned resolve_jobs(int jobs) { return jobs <= 0 ? default_jobs() : static_cast<unsigned>(jobs); }

std::string fmt(double v, const char* f = "%.4f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string game;
  std::string out;
  bool dry_run = false;
  int jobs = -1;
};

int cmd_simulate(const SimulateArgs& a) {
  GameConfig cfg = load_game_config(a.game);
  if (a.jobs >= 0) cfg.jobs = resolve_jobs(a.jobs);
  const std::string hash = config_hash(cfg);
  if (a.dry_run) {
    auto plan = plan_runs(cfg);
    const auto sybils = sybil_inputs(cfg);
    std::cout << "config_hash " << hash << "\n"
              << "game " << (cfg.game == GameKind::kDistinguish ? "distinguish" : "fingerprint") << "\n"
              << "runs " << plan.size() << "\n"
              << "sybils_per_run " << sybils.size() << "\n";
    for (const auto& e : plan) {
      std::cout << "run " << e.run << " label " << e.label << " seed " << e.seed << " input " << e.input << "\n";
    }
    return kExitOk;
  }
  if (a.out.empty()) throw UsageError("--out is required unless --dry-run is given");
  LabeledDataset ds = run_game(cfg);
  const fs::path out(a.out);
  if (fs::exists(out / "dataset.json")) fs::remove_all(out / "traces");
  write_dataset(ds, out);
  std::size_t ones = 0;
  for (const auto& e : ds.entries) ones += e.label;
  std::cout << "config_hash " << hash << "\n"
            << "runs " << ds.entries.size() << "\n"
            << "label_0 " << ds.entries.size() - ones << "\n"
            << "label_1 " << ones << "\n";
  if (cfg.game == GameKind::kFingerprint) {
    std::cout << "s_c " << fmt(ds.s_c, "%.6f") << "\n"
              << "s_f " << fmt(ds.s_f, "%.6f") << "\n";
  }
  std::cout << "digest " << dataset_digest(out, ds) << "\n"
            << "out " << out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string dataset;
  std::string features = "F1";
  bool seq = false;
  std::string out;
  std::string plot;
  std::string ks;
  std::string export_features;
  std::string export_tokens;
  int trials = 5;
  double split = 0.8;
  std::uint64_t seed = 0;
  int jobs = 0;
  unsigned hist_bins = 10;
  unsigned max_code_pages = 64;
  unsigned max_data_pages = 64;
  double l2 = 1.0;
  int iterations = 1000;
};

int cmd_analyze(const AnalyzeArgs& a) {
  AnalyzeOptions opts;
  opts.sets = parse_sets(a.features);
  opts.seq = a.seq;
  opts.eval.trials = a.trials;
  opts.eval.split = a.split;
  opts.eval.seed = a.seed;
  opts.eval.jobs = resolve_jobs(a.jobs);
  opts.eval.train.l2_lambda = a.l2;
  opts.eval.train.iterations = a.iterations;
  opts.params = {a.hist_bins, a.max_code_pages, a.max_data_pages};
  if (a.trials < 1) throw UsageError("--trials must be >= 1");
  if (!(a.split > 0 && a.split < 1)) throw UsageError("--split must lie in (0, 1)");
  if (a.hist_bins == 0) throw UsageError("--hist-bins must be >= 1");

  LabeledDataset ds = read_dataset(a.dataset);
  AnalyzeResult res = analyze_dataset(ds, opts);
  for (const auto& w : res.table.warnings) std::cerr << "warning: " << w << "\n";

  write_text(a.out, res.report.dump(2) + "\n");
  if (res.advantage) {
    std::cout << "set       accuracy  normalized_adv  std\n";
    for (const auto& r : res.advantage->results) {
      std::printf("%-9s %.4f    %.4f          %.4f\n", r.name.c_str(), r.test_accuracy.mean,
                  r.normalized_advantage.mean, r.normalized_advantage.std);
    }
    if (res.advantage->bound) {
      std::cout << "bound (normalized) " << fmt(res.advantage->bound->normalized) << "\n";
    }
    std::cout << "sigma " << fmt(res.advantage->sigma()) << "\n";
    if (!a.plot.empty()) write_text(a.plot, advantage_bar_svg(*res.advantage, "normalized advantage"));
  } else if (res.fingerprint) {
    const auto& f = *res.fingerprint;
    std::printf("interest    accuracy %.4f  baseline %.4f  normalized_adv %.4f\n", f.interest.test_accuracy.mean,
                f.interest.baseline, f.interest.normalized_advantage.mean);
    std::printf("fingerprint accuracy %.4f  baseline %.4f  normalized_adv %.4f  sigma %.4f\n",
                f.fingerprint.test_accuracy.mean, f.fingerprint.baseline,
                f.fingerprint.normalized_advantage.mean, f.fingerprint_sigma());
    if (!a.plot.empty()) std::cerr << "warning: --plot is only drawn for distinguishing datasets\n";
  }
  if (!a.ks.empty()) {
    std::ostringstream csv;
    write_ks_csv(csv, ks_table(res.table, ds.labels()));
    write_text(a.ks, csv.str());
  }
  if (!a.export_features.empty()) {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    for (Eigen::Index i = 0; i < res.table.x.rows(); ++i) {
      rows.emplace_back(res.table.x.row(i).begin(), res.table.x.row(i).end());
      labels.push_back(std::to_string(ds.entries[static_cast<std::size_t>(i)].label));
    }
    std::ostringstream csv;
    write_feature_csv(csv, res.table.schema, rows, labels);
    write_text(a.export_features, csv.str());
  }
  if (!a.export_tokens.empty()) {
    std::vector<TokenSequence> seqs;
    for (const auto& t : ds.traces) seqs.push_back(tokenize(t));
    std::ostringstream out;
    write_token_lines(out, seqs);
    write_text(a.export_tokens, out.str());
  }
  std::cout << "report " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct BoundArgs {
  double eps = -1;
  double delta = 0;
  bool json = false;
};

int cmd_bound(const BoundArgs& a) {
  DpBound b;
  try {
    b = dp_bound({a.eps, a.delta});
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.json) {
    std::cout << to_json(b, {a.eps, a.delta}).dump(2) << "\n";
  } else {
    std::cout << "eps        " << a.eps << "\n"
              << "delta      " << a.delta << "\n"
              << "bound      " << fmt(b.value) << "\n"
              << "normalized " << fmt(b.normalized) << "\n"
              << "useful     " << (b.useful ? "true" : "false") << "\n";
  }
  if (!b.useful) {
    std::cerr << "warning: eps >= ln(3 - 2 delta) = " << fmt(std::log(3 - 2 * a.delta))
              << "; the bound is not useful in this regime\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string eps_list = "0.05,0.1,0.2,0.5";
  double delta = -1;
  std::string config;
  std::string features = "F1,F2,F3,F4,F5";
  std::string out;
  std::string plot;
  std::size_t traces_per_class = 0;
  int trials = 5;
  int jobs = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool save_datasets = false;
};

std::vector<double> parse_eps_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(item, &used);
      if (used != item.size() || !(v >= 0)) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("--eps-list: bad value '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--eps-list is empty");
  return out;
}

int cmd_sweep(const SweepArgs& a) {
  SweepOptions opts;
  opts.eps_list = parse_eps_list(a.eps_list);
  if (!a.config.empty()) {
    opts.base = load_game_config(a.config);
    if (opts.base.game != GameKind::kDistinguish || opts.base.workload.kind != WorkloadConfig::Kind::kPhh) {
      throw ConfigError("/game", "sweep needs a distinguishing phh config");
    }
  }
  if (a.delta >= 0) opts.delta = a.delta;
  if (a.traces_per_class > 0) opts.base.traces_per_class = a.traces_per_class;
  if (a.seed_set) opts.base.base_seed = a.seed;
  opts.base.jobs = resolve_jobs(a.jobs);
  opts.analyze.sets = parse_sets(a.features);
  opts.analyze.eval.trials = a.trials;
  opts.analyze.eval.jobs = resolve_jobs(a.jobs);
  opts.analyze.eval.seed = opts.base.base_seed;
  opts.base.validate();

  const fs::path out(a.out);
  fs::create_directories(out);
  auto steps = run_sweep(opts, [&](double eps, const LabeledDataset& ds) {
    std::cerr << "eps " << eps << ": " << ds.entries.size() << " traces\n";
    if (a.save_datasets) write_dataset(ds, out / ("dataset_eps_" + fmt(eps, "%g")));
  });
  std::vector<SweepPoint> points;
  for (const auto& s : steps) {
    nlohmann::ordered_json j = s.report_json;
    j["eps"] = s.point.eps;
    j["delta"] = s.point.delta;
    write_text(out / ("report_eps_" + fmt(s.point.eps, "%g") + ".json"), j.dump(2) + "\n");
    points.push_back(s.point);
  }
  std::ostringstream csv;
  write_sweep_csv(csv, points);
  write_text(out / "sweep.csv", csv.str());
  write_text(a.plot.empty() ? out / "sweep.svg" : fs::path(a.plot),
             sweep_svg(points, "normalized advantage vs epsilon"));
  std::cout << csv.str();
  for (const auto& p : points) {
    if (!p.bound.useful) std::cerr << "warning: eps " << p.eps << " is outside the bound's useful regime\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CovertArgs {
  std::size_t bytes = 48;
  std::size_t reps = 100;
  std::uint64_t seed = 0;
  std::string save;
  std::string replay;
};

int cmd_covert(const CovertArgs& a) {
  CovertResult r = a.replay.empty() ? run_covert(a.bytes, a.reps, a.seed) : replay_covert(a.replay);
  if (!a.save.empty()) save_covert(r, a.save);
  for (std::size_t i = 0; i < r.reps.size(); ++i) {
    const auto& rep = r.reps[i];
    if (rep.decode_error_at) {
      std::cout << "rep " << i << " decode error at byte " << *rep.decode_error_at << ": " << rep.decode_error << "\n";
    }
    for (std::size_t pos : rep.wrong_positions) {
      std::cout << "rep " << i << " byte " << pos << " sent ";
      std::cout << (pos < rep.sent.size() ? "0x" + to_hex_bytes({rep.sent[pos]}) : std::string("-"));
      std::cout << " decoded ";
      std::cout << (pos < rep.decoded.size() ? "0x" + to_hex_bytes({rep.decoded[pos]}) : std::string("-"));
      std::cout << "\n";
    }
  }
  std::cout << "reps " << r.reps.size() << "\n"
            << "bytes " << r.bytes_sent << "\n"
            << "byte_errors " << r.byte_errors << "\n"
            << "error_rate " << fmt(r.error_rate(), "%g") << "\n"
            << "faults_per_byte " << fmt(r.faults_per_byte(), "%g") << "\n";
  return r.ok() ? kExitOk : kExitCovert;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leaklab: simulated controlled-channel leakage analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "leaklab 0.1.0");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a privacy game and write a labeled trace dataset");
  simulate->add_option("--game", sim.game, "Game config (JSON)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output dataset directory");
  simulate->add_flag("--dry-run", sim.dry_run, "Print the planned runs and write nothing");
  simulate->add_option("--jobs", sim.jobs, "Worker threads (0 = all cores); never changes results");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Measure attacker advantage on a dataset");
  analyze->add_option("--dataset", an.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  analyze->add_option("--features", an.features, "Comma list of F1..F5, or 'union'")->capture_default_str();
  analyze->add_flag("--seq", an.seq, "Also train the token n-gram sequence classifier");
  analyze->add_option("--out", an.out, "Report JSON path")->required();
  analyze->add_option("--plot", an.plot, "Bar chart SVG path");
  analyze->add_option("--ks", an.ks, "Per-feature Kolmogorov-Smirnov CSV path");
  analyze->add_option("--export-features", an.export_features, "Feature matrix CSV path");
  analyze->add_option("--export-tokens", an.export_tokens, "Token sequences path (one line per trace)");
  analyze->add_option("--trials", an.trials, "Train/test trials")->capture_default_str();
  analyze->add_option("--split", an.split, "Training fraction")->capture_default_str();
  analyze->add_option("--seed", an.seed, "Split seed")->capture_default_str();
  analyze->add_option("--jobs", an.jobs, "Worker threads (0 = all cores)");
  analyze->add_option("--hist-bins", an.hist_bins, "F4 histogram bins")->capture_default_str();
  analyze->add_option("--max-code-pages", an.max_code_pages, "F5 code pages")->capture_default_str();
  analyze->add_option("--max-data-pages", an.max_data_pages, "F5 data pages")->capture_default_str();
  analyze->add_option("--l2", an.l2, "L2 penalty")->capture_default_str();
  analyze->add_option("--iterations", an.iterations, "Optimizer iteration cap")->capture_default_str();

  BoundArgs bd;
  auto* bound = app.add_subcommand("bound", "Print the analytical advantage bound for (eps, delta)");
  bound->add_option("--eps,eps", bd.eps, "Privacy parameter epsilon")->required();
  bound->add_option("--delta,delta", bd.delta, "Privacy parameter delta")->capture_default_str();
  bound->add_flag("--json", bd.json, "Print JSON");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Run the mitigated heavy-hitters game per epsilon and overlay the bound");
  sweep->add_option("--eps-list", sw.eps_list, "Comma list of epsilons")->capture_default_str();
  sweep->add_option("--delta", sw.delta, "Delta (default: the config's)");
  sweep->add_option("--config", sw.config, "Base distinguishing phh config")->check(CLI::ExistingFile);
  sweep->add_option("--features", sw.features, "Feature sets")->capture_default_str();
  sweep->add_option("--out", sw.out, "Output directory")->required();
  sweep->add_option("--plot", sw.plot, "SVG path (default <out>/sweep.svg)");
  sweep->add_option("--traces-per-class", sw.traces_per_class, "Override traces per class");
  sweep->add_option("--trials", sw.trials, "Train/test trials")->capture_default_str();
  sweep->add_option("--jobs", sw.jobs, "Worker threads (0 = all cores)");
  auto* sweep_seed = sweep->add_option("--seed", sw.seed, "Base seed");
  sweep->add_flag("--save-datasets", sw.save_datasets, "Keep each epsilon's dataset under <out>");

  CovertArgs cv;
  auto* covert = app.add_subcommand("covert", "Run the ciphertext-block covert channel");
  covert->add_option("--bytes", cv.bytes, "Message length")->capture_default_str();
  covert->add_option("--reps", cv.reps, "Repetitions")->capture_default_str();
  covert->add_option("--seed", cv.seed, "Seed")->capture_default_str();
  covert->add_option("--save", cv.save, "Directory for traces and messages");
  covert->add_option("--replay", cv.replay, "Decode a saved directory instead of sending")
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*analyze) return cmd_analyze(an);
    if (*bound) return cmd_bound(bd);
    if (*sweep) {
      sw.seed_set = sweep_seed->count() > 0;
      return cmd_sweep(sw);
    }
    if (*covert) return cmd_covert(cv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
