#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "modarc/bench.hpp"
#include "modarc/error.hpp"

namespace {

using namespace modarc;

struct RunArgs {
  std::string config;
  std::string env;
  std::string seeds;
  long budget = -1;
  std::string variant;
  std::string output;
  int workers = 0;
};

struct EvalArgs {
  std::string agent_dir;
  std::string config;
  std::string env;
  int episodes = 50;
  std::uint64_t seed = 7;
  long cap = 2000;
};

ExperimentSpec build_spec(const RunArgs& a) {
  KvConfig cfg = a.config.empty() ? KvConfig{} : KvConfig::load(a.config);
  // Command-line flags override the file.
  if (!a.env.empty()) cfg.set("env", a.env);
  if (!a.seeds.empty()) cfg.set("seeds", a.seeds);
  if (a.budget >= 0) cfg.set("budget", std::to_string(a.budget));
  if (!a.variant.empty()) cfg.set("variant", a.variant);
  if (!a.output.empty()) cfg.set("output", a.output);
  if (a.workers > 0) cfg.set("workers", std::to_string(a.workers));
  return load_experiment(cfg);
}

int cmd_run(const RunArgs& a, int verbosity) {
  ExperimentSpec spec = build_spec(a);
  if (verbosity >= 2) spec.debug_log = true;
  if (verbosity >= 1) {
    std::fprintf(stderr, "run %s/%s: %zu seed(s), %ld steps each -> %s\n",
                 std::string(to_string(spec.env)).c_str(),
                 std::string(to_string(spec.variant)).c_str(), spec.seeds.size(), spec.budget,
                 spec.output.string().c_str());
  }
  const auto result = run_experiment(spec);
  for (const auto& r : result.runs) {
    const auto& last = r.curve.back();
    std::printf("seed %llu: step %ld score %.3f interception %.3f\n",
                static_cast<unsigned long long>(r.seed), last.step, last.mean_score,
                last.interception_rate);
  }
  std::printf("aggregate: %s\nmanifest: %s\n", result.aggregate_csv.string().c_str(),
              result.manifest.string().c_str());
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  // The run's config file is accepted as is; experiment keys pick env and variant.
  KvConfig cfg = a.config.empty() ? KvConfig{} : KvConfig::load(a.config);
  if (!a.env.empty()) cfg.set("env", a.env);
  const ExperimentSpec spec = load_experiment(cfg);
  const EnvName env = spec.env;
  const AgentConfig config = configure_variant(spec.agent, spec.variant);
  Agent agent(env, config, 0);
  agent.load(a.agent_dir);
  const auto m = evaluate(agent, env, a.episodes, a.seed, a.cap);
  nlohmann::json j;
  j["env"] = to_string(env);
  j["episodes"] = m.episodes;
  j["mean_score"] = m.mean_score;
  j["max_score"] = m.max_score;
  j["interception_rate"] = m.interception_rate;
  j["mean_rally_length"] = m.mean_rally_length;
  j["goal_on_target"] = m.goal_on_target;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modular object-centric arcade agent: train, evaluate, export curves"};
  app.require_subcommand(1);
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "Progress on stderr; twice for per-tick debug logs");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Train seeds and write learning curves");
  run_cmd->add_option("-c,--config", run.config, "Key-value config file");
  run_cmd->add_option("-e,--env", run.env, "duel, bricks or pinball_lite");
  run_cmd->add_option("-s,--seeds", run.seeds, "Comma-separated seeds");
  run_cmd->add_option("-b,--budget", run.budget, "Env steps per seed");
  run_cmd->add_option("--variant", run.variant, "full, no_her, random or tracker_baseline");
  run_cmd->add_option("-o,--out", run.output, "Output directory");
  run_cmd->add_option("-j,--workers", run.workers, "Seeds trained in parallel");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a saved agent with a frozen policy");
  eval_cmd->add_option("agent", eval.agent_dir, "Agent directory written by run")->required();
  eval_cmd->add_option("-e,--env", eval.env, "Environment");
  eval_cmd->add_option("-c,--config", eval.config, "Config file the snapshot was trained with");
  eval_cmd->add_option("-n,--episodes", eval.episodes, "Evaluation episodes");
  eval_cmd->add_option("--seed", eval.seed, "Evaluation seed");
  eval_cmd->add_option("--cap", eval.cap, "Max env steps per episode");

  std::vector<std::string> inputs;
  std::string tidy = "tidy.csv";
  auto* export_cmd = app.add_subcommand("export", "Merge curve CSVs into one tidy table");
  export_cmd->add_option("curves", inputs, "Curve CSV files");
  export_cmd->add_option("-o,--out", tidy, "Output CSV");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return cmd_run(run, verbosity);
    if (*eval_cmd) return cmd_eval(eval);
    if (*export_cmd) {
      const auto rows = plot_export({inputs.begin(), inputs.end()}, tidy);
      std::printf("%zu rows -> %s\n", rows, tidy.c_str());
    }
    return 0;
  } catch (const modarc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
