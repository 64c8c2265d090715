#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "modarc/agent.hpp"
#include "modarc/kv_config.hpp"

namespace modarc {

enum class Variant { full, no_her, random, tracker_baseline };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);
// The agent configuration a variant runs with. no_her differs from full only
// in controller.use_her.
AgentConfig configure_variant(AgentConfig base, Variant v);

struct ExperimentSpec {
  EnvName env = EnvName::duel;
  std::vector<std::uint64_t> seeds = {1};
  long budget = 25000;       // env steps per seed
  Variant variant = Variant::full;
  AgentConfig agent;
  long eval_every = 1000;
  int eval_episodes = 10;
  long episode_cap = 2000;   // env steps per episode, training and eval
  int workers = 1;
  bool debug_log = false;    // per-tick JSON lines next to each curve
  std::filesystem::path output = "runs";

  void validate() const;
};

// Keys: env, seeds, budget, variant, eval_every, eval_episodes, episode_cap,
// workers, debug_log, output; everything else is passed to load_agent_config.
ExperimentSpec load_experiment(const KvConfig& cfg, ExperimentSpec base = {});

struct CurvePoint {
  long step = 0;
  double mean_score = 0.0;
  double max_score = 0.0;
  double interception_rate = 0.0;
  double predictor_mse = 0.0;
  double goal_success = 0.0;
  double rally_length = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

inline constexpr const char* kCurveMetrics[] = {"mean_score",    "max_score",
                                               "interception_rate", "predictor_mse",
                                               "goal_success",  "rally_length"};
inline constexpr int kCurveMetricCount = 6;

struct CurveFile {
  std::string env;
  std::string variant;
  std::string seed;  // a seed number, or "median" for aggregates
  std::vector<CurvePoint> points;
};

void write_curve(const std::filesystem::path& path, const CurveFile& curve);
// Throws ParseError with the offending line number.
CurveFile read_curve(const std::filesystem::path& path);

struct EvalMetrics {
  int episodes = 0;
  double mean_score = 0.0;
  double max_score = 0.0;
  double interception_rate = 0.0;
  double mean_rally_length = 0.0;
  double goal_on_target = 0.0;  // interceptions with the controllable at its goal
  long hits = 0;
  long misses = 0;
  std::vector<double> scores;
  std::vector<double> episode_interception;
};

// Frozen-policy evaluation on a private copy of `snapshot`.
EvalMetrics evaluate(const Agent& snapshot, EnvName env, int episodes, std::uint64_t seed,
                     long episode_cap = 2000);

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<CurvePoint> curve;
  EvalMetrics final_eval;
  std::filesystem::path csv;
  std::filesystem::path agent_dir;
};

// Trains one seed for the full budget, evaluating every eval_every steps.
// `final_episodes` > 0 replaces the last point's evaluation width.
SeedRun train_seed(const ExperimentSpec& spec, std::uint64_t seed, int final_episodes = 0);

struct ExperimentResult {
  std::vector<SeedRun> runs;
  std::filesystem::path aggregate_csv;
  std::filesystem::path manifest;
};

// Throws IoError before any training when the output is not writable.
ExperimentResult run_experiment(const ExperimentSpec& spec, int final_episodes = 0);

// Median over seeds at each eval step.
CurveFile aggregate_median(const std::vector<CurveFile>& runs);

struct TidyRow {
  std::string env;
  std::string variant;
  std::string seed;
  long step = 0;
  std::string metric;
  double value = 0.0;

  friend bool operator==(const TidyRow&, const TidyRow&) = default;
};

// Merges curve files into one `env,variant,seed,step,metric,value` table.
// Returns the number of data rows written.
std::size_t plot_export(const std::vector<std::filesystem::path>& inputs,
                        const std::filesystem::path& output);
std::vector<TidyRow> read_tidy(const std::filesystem::path& path);

std::string version_string();
double median(std::vector<double> values);

}  // namespace modarc
