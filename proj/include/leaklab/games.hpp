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

#ifndef LEAKLAB_GAMES_HPP_
#define LEAKLAB_GAMES_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "leaklab/collector.hpp"
#include "leaklab/rng.hpp"
#include "leaklab/trace.hpp"
#include "leaklab/workloads.hpp"

namespace leaklab {

// Configuration problem located by a JSON pointer ("" for the document).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : std::runtime_error(pointer.empty() ? what : pointer + ": " + what),
        pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

// ---------------------------------------------------------------------------
// Priors.

struct PriorDistribution {
  std::vector<std::string> support;
  std::vector<double> probs;

  static PriorDistribution uniform_pair(std::string x0, std::string x1);
  // prob_i proportional to (i + 1)^(-s).
  static PriorDistribution power_law(std::vector<std::string> list, double s);
  // Throws std::invalid_argument unless probs is a simplex (sum 1 +- 1e-12).
  static PriorDistribution explicit_table(std::vector<std::string> support, std::vector<double> probs);

  std::size_t sample_index(Rng& rng) const;
  double mass(const std::vector<std::string>& subset) const;
};

// Baselines of the fingerprinting game for prior W and interest set I:
// s_c = max(Pr[x in I], Pr[x not in I]), s_f = max_{i in I} Pr[x = i | x in I].
struct Baselines {
  double s_c = 0;
  double s_f = 0;
};
Baselines game_baselines(const PriorDistribution& w, const std::vector<std::string>& interest);

// 1000 synthetic hostnames; exactly 301 do not end in .com/.net/.org.
const std::vector<std::string>& bundled_url_list();
// The bundled entries outside .com/.net/.org.
std::vector<std::string> bundled_cctld_entries();
bool is_valid_hostname(std::string_view host);

// ---------------------------------------------------------------------------
// Game configuration.

enum class GameKind { kDistinguish, kFingerprint };
enum class PirMode { kNaive, kScan, kOram };

struct WorkloadConfig {
  enum class Kind { kPhh, kPir } kind = Kind::kPhh;
  PhhConfig phh;
  PirMode pir_mode = PirMode::kScan;
  std::size_t db_size = 256;
  std::uint64_t db_seed = 1;
  double zero_fraction = 0.0;
  bool oram_flaw = false;
  std::size_t stash_bound = 100;
};

struct SybilSpec {
  enum class Kind { kFixedCopies, kOneOfEach, kOutOfDomainFill, kRehashForcer } kind;
  std::size_t n = 0;
  std::string value;
};

// Out-of-domain filler keys.
inline constexpr std::string_view kFillerPrefix = "sybil://";

struct GameConfig {
  GameKind game = GameKind::kDistinguish;
  WorkloadConfig workload;
  CollectorPolicy policy;
  std::string x0, x1;                 // distinguish
  PriorDistribution prior;            // fingerprint
  std::vector<std::string> interest;  // fingerprint
  std::vector<SybilSpec> sybils;
  std::size_t traces_per_class = 10;  // distinguish
  std::size_t traces = 100;           // fingerprint, total
  std::uint64_t base_seed = 0;
  unsigned jobs = 1;  // 0 = hardware concurrency; never affects results

  // Throws ConfigError.
  void validate() const;
  std::size_t total_runs() const;
};

GameConfig game_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const GameConfig& cfg);
CollectorPolicy policy_from_json(const nlohmann::json& j, const std::string& pointer = "/collector");
nlohmann::ordered_json to_json(const CollectorPolicy& p);
// 16 hex digits of FNV-1a over the canonical JSON form.
std::string config_hash(const GameConfig& cfg);

// Reads a config file; LEAKLAB_SEED, when set, replaces the base seed.
GameConfig load_game_config(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Datasets.

struct DatasetEntry {
  std::size_t run = 0;
  int label = 0;      // distinguish: c; fingerprint: membership bit
  int identity = -1;  // fingerprint: index in the interest set, -1 otherwise
  std::string input;  // the target's element
  std::uint64_t seed = 0;
  std::uint64_t rehashes = 0;
};

struct LabeledDataset {
  GameConfig config;
  std::string config_hash;
  std::vector<DatasetEntry> entries;
  std::vector<Trace> traces;
  double s_c = 0;
  double s_f = 0;

  std::vector<int> labels() const;
  std::vector<int> identities() const;
};

// The Sybil inputs that precede the target's element for this config.
// Throws ConfigError when the rehash forcer cannot be sized.
std::vector<std::string> sybil_inputs(const GameConfig& cfg);

struct RunResult {
  Trace trace;
  std::uint64_t rehashes = 0;
};

// Executes one run of the configured workload with `input` as the target's
// element; everything random derives from `run_seed`.
RunResult execute_run(const GameConfig& cfg, const std::vector<std::string>& sybils,
                      const std::string& input, std::uint64_t run_seed);

LabeledDataset run_distinguishing_game(const GameConfig& cfg);
LabeledDataset run_fingerprinting_game(const GameConfig& cfg);
LabeledDataset run_game(const GameConfig& cfg);

// The planned (label, input, seed) of every run without executing anything.
std::vector<DatasetEntry> plan_runs(const GameConfig& cfg);

// Layout: dataset.json, manifest.jsonl, traces/run_NNNNNN.trace.
void write_dataset(const LabeledDataset& ds, const std::filesystem::path& dir);
LabeledDataset read_dataset(const std::filesystem::path& dir);

}  // namespace leaklab

#endif  // LEAKLAB_GAMES_HPP_
