#include "modarc/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include "json.hpp"
#include "modarc/error.hpp"

#ifndef MODARC_VERSION
#define MODARC_VERSION "0.0.0"
#endif

namespace modarc {

std::string version_string() { return MODARC_VERSION; }

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_her: return "no_her";
    case Variant::random: return "random";
    case Variant::tracker_baseline: return "tracker_baseline";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "full") return Variant::full;
  if (name == "no_her") return Variant::no_her;
  if (name == "random") return Variant::random;
  if (name == "tracker_baseline" || name == "tracker") return Variant::tracker_baseline;
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

AgentConfig configure_variant(AgentConfig base, Variant v) {
  switch (v) {
    case Variant::full: base.controller.use_her = true; break;
    case Variant::no_her: base.controller.use_her = false; break;
    case Variant::random: base.policy = Policy::random; break;
    case Variant::tracker_baseline: base.policy = Policy::tracker; break;
  }
  return base;
}

void ExperimentSpec::validate() const {
  if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (budget < eval_every) throw ConfigError("budget must be >= eval_every");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be >= 1");
  if (episode_cap < 1) throw ConfigError("episode_cap must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  agent.validate();
}

ExperimentSpec load_experiment(const KvConfig& cfg, ExperimentSpec base) {
  KvConfig rest;
  for (const auto& [key, value] : cfg.entries()) {
    if (key == "env") base.env = parse_env_name(value);
    else if (key == "seeds") {
      base.seeds.clear();
      for (long s : cfg.get_int_list(key, {})) {
        if (s < 0) throw ConfigError("seeds must be non-negative");
        base.seeds.push_back(static_cast<std::uint64_t>(s));
      }
    } else if (key == "budget") base.budget = cfg.get_int(key, base.budget);
    else if (key == "variant") base.variant = parse_variant(value);
    else if (key == "eval_every") base.eval_every = cfg.get_int(key, base.eval_every);
    else if (key == "eval_episodes") base.eval_episodes = int(cfg.get_int(key, base.eval_episodes));
    else if (key == "episode_cap") base.episode_cap = cfg.get_int(key, base.episode_cap);
    else if (key == "workers") base.workers = int(cfg.get_int(key, base.workers));
    else if (key == "debug_log") base.debug_log = cfg.get_bool(key, false);
    else if (key == "output") base.output = value;
    else rest.set(key, value);
  }
  base.agent = load_agent_config(rest, base.agent);
  base.validate();
  return base;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, long line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ParseError("trailing characters in '" + s + "'", line);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad number '" + s + "'", line);
  }
}

long parse_long(const std::string& s, long line) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw ParseError("trailing characters in '" + s + "'", line);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError("bad integer '" + s + "'", line);
  }
}

const char* kCurveHeader =
    "env,variant,seed,step,mean_score,max_score,interception_rate,predictor_mse,goal_success,"
    "rally_length";

double metric_of(const CurvePoint& p, int i) {
  switch (i) {
    case 0: return p.mean_score;
    case 1: return p.max_score;
    case 2: return p.interception_rate;
    case 3: return p.predictor_mse;
    case 4: return p.goal_success;
    default: return p.rally_length;
  }
}

double& metric_ref(CurvePoint& p, int i) {
  switch (i) {
    case 0: return p.mean_score;
    case 1: return p.max_score;
    case 2: return p.interception_rate;
    case 3: return p.predictor_mse;
    case 4: return p.goal_success;
    default: return p.rally_length;
  }
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

nlohmann::json spec_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["version"] = version_string();
  j["env"] = std::string(to_string(spec.env));
  j["variant"] = std::string(to_string(spec.variant));
  j["seeds"] = spec.seeds;
  j["budget"] = spec.budget;
  j["eval_every"] = spec.eval_every;
  j["eval_episodes"] = spec.eval_episodes;
  j["episode_cap"] = spec.episode_cap;
  nlohmann::json agent = nlohmann::json::object();
  for (const auto& [k, v] : describe(configure_variant(spec.agent, spec.variant))) agent[k] = v;
  j["agent"] = agent;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string run_stem(const ExperimentSpec& spec) {
  return std::string(to_string(spec.env)) + "_" + std::string(to_string(spec.variant));
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void write_curve(const std::filesystem::path& path, const CurveFile& curve) {
  std::string text = std::string(kCurveHeader) + "\n";
  for (const auto& p : curve.points) {
    text += curve.env + "," + curve.variant + "," + curve.seed + "," + std::to_string(p.step);
    for (int i = 0; i < kCurveMetricCount; ++i) text += "," + fmt(metric_of(p, i));
    text += "\n";
  }
  write_text(path, text);
}

CurveFile read_curve(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  CurveFile out;
  std::string line;
  long n = 0;
  if (!std::getline(in, line) || line != kCurveHeader) {
    throw ParseError("missing or unexpected curve header in " + path.string(), 1);
  }
  ++n;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != std::size_t(4 + kCurveMetricCount)) {
      throw ParseError("expected " + std::to_string(4 + kCurveMetricCount) + " fields", n);
    }
    if (out.points.empty()) {
      out.env = cells[0];
      out.variant = cells[1];
      out.seed = cells[2];
    } else if (cells[0] != out.env || cells[1] != out.variant || cells[2] != out.seed) {
      throw ParseError("mixed runs in one curve file", n);
    }
    CurvePoint p;
    p.step = parse_long(cells[3], n);
    if (!out.points.empty() && p.step <= out.points.back().step) {
      throw ParseError("step counts must increase", n);
    }
    for (int i = 0; i < kCurveMetricCount; ++i) metric_ref(p, i) = parse_number(cells[4 + i], n);
    out.points.push_back(p);
  }
  return out;
}

EvalMetrics evaluate(const Agent& snapshot, EnvName env, int episodes, std::uint64_t seed,
                     long episode_cap) {
  if (episodes < 1) throw ConfigError("evaluate needs episodes >= 1");
  Agent agent = snapshot;
  agent.set_training(false);
  agent.set_debug_log(nullptr);
  agent.reset_totals();
  EvalMetrics m;
  m.episodes = episodes;
  double rally_sum = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const auto s = run_episode(env, agent, episode_cap, mix(seed, std::uint64_t(e)));
    m.scores.push_back(s.score);
    m.episode_interception.push_back(s.interception_rate);
    m.hits += s.hits;
    m.misses += s.misses;
    rally_sum += s.mean_rally_length;
  }
  double total = 0.0;
  for (double s : m.scores) total += s;
  m.mean_score = total / episodes;
  m.max_score = *std::max_element(m.scores.begin(), m.scores.end());
  const long attempts = m.hits + m.misses;
  m.interception_rate = attempts ? double(m.hits) / double(attempts) : 0.0;
  m.mean_rally_length = rally_sum / episodes;
  const auto& t = agent.totals();
  m.goal_on_target = t.rallies_scored ? double(t.rallies_on_goal) / double(t.rallies_scored) : 0.0;
  return m;
}

SeedRun train_seed(const ExperimentSpec& spec, std::uint64_t seed, int final_episodes) {
  spec.validate();
  SeedRun run;
  run.seed = seed;
  Agent agent(spec.env, configure_variant(spec.agent, spec.variant), seed);
  std::uint64_t episode_seed = mix(seed, 0x7a11);
  const std::uint64_t eval_seed = mix(seed, 0xe7a1);
  EnvState state = reset(spec.env, episode_seed, agent.layout());
  agent.begin_episode();
  StepEvents events;
  long episode_steps = 0;
  AgentTotals window = agent.totals();
  const bool pixels = agent.config().use_pixels;
  std::ofstream debug;
  if (spec.debug_log && !spec.output.empty()) {
    const auto path = spec.output / (run_stem(spec) + "_seed" + std::to_string(seed) + "_debug.jsonl");
    debug.open(path);
    if (!debug) throw IoError("cannot write " + path.string());
    agent.set_debug_log(&debug);
  }

  for (long stepno = 1; stepno <= spec.budget; ++stepno) {
    const std::string action = pixels ? agent.tick(render(state), events) : agent.tick(state, events);
    StepResult r = step(state, action, agent.config().frame_skip);
    events = {std::move(r.rewards), std::move(r.contacts)};
    state = std::move(r.state);
    ++episode_steps;
    if (state.terminal || episode_steps >= spec.episode_cap) {
      agent.end_episode(events, state.tick);
      state = reset(spec.env, ++episode_seed, agent.layout());
      agent.begin_episode();
      events = {};
      episode_steps = 0;
    }
    if (stepno % spec.eval_every != 0) continue;
    const bool last = stepno + spec.eval_every > spec.budget;
    const int episodes = last && final_episodes > 0 ? final_episodes : spec.eval_episodes;
    EvalMetrics m = evaluate(agent, spec.env, episodes, eval_seed, spec.episode_cap);
    const AgentTotals& now = agent.totals();
    CurvePoint p;
    p.step = stepno;
    p.mean_score = m.mean_score;
    p.max_score = m.max_score;
    p.interception_rate = m.interception_rate;
    const long pu = now.predictor_updates - window.predictor_updates;
    p.predictor_mse = pu ? (now.predictor_loss - window.predictor_loss) / double(pu) : 0.0;
    p.goal_success = m.goal_on_target;
    p.rally_length = m.mean_rally_length;
    run.curve.push_back(p);
    window = now;
    if (last) run.final_eval = std::move(m);
  }
  agent.set_debug_log(nullptr);
  if (!spec.output.empty()) {
    run.agent_dir = spec.output / (run_stem(spec) + "_seed" + std::to_string(seed) + "_agent");
    if (agent.config().policy == Policy::learned) agent.save(run.agent_dir);
  }
  return run;
}

CurveFile aggregate_median(const std::vector<CurveFile>& runs) {
  if (runs.empty()) throw ConfigError("nothing to aggregate");
  CurveFile out{runs[0].env, runs[0].variant, "median", {}};
  for (std::size_t i = 0; i < runs[0].points.size(); ++i) {
    CurvePoint p;
    p.step = runs[0].points[i].step;
    for (int m = 0; m < kCurveMetricCount; ++m) {
      std::vector<double> values;
      for (const auto& r : runs) {
        if (i >= r.points.size() || r.points[i].step != p.step) {
          throw ConfigError("runs disagree on eval steps");
        }
        values.push_back(metric_of(r.points[i], m));
      }
      metric_ref(p, m) = median(values);
    }
    out.points.push_back(p);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int final_episodes) {
  spec.validate();
  {
    std::error_code ec;
    std::filesystem::create_directories(spec.output, ec);
    const auto probe = spec.output / ".write_probe";
    std::ofstream test(probe);
    if (ec || !test) throw IoError("output directory not writable: " + spec.output.string());
    test.close();
    std::filesystem::remove(probe, ec);
  }
  const std::string stem = run_stem(spec);
  ExperimentResult result;
  result.runs.resize(spec.seeds.size());
  auto work = [&](std::size_t i) {
    SeedRun run = train_seed(spec, spec.seeds[i], final_episodes);
    run.csv = spec.output / (stem + "_seed" + std::to_string(run.seed) + ".csv");
    write_curve(run.csv, {std::string(to_string(spec.env)), std::string(to_string(spec.variant)),
                          std::to_string(run.seed), run.curve});
    auto manifest = spec_json(spec);
    manifest["seed"] = run.seed;
    manifest["curve"] = run.csv.filename().string();
    write_text(spec.output / (stem + "_seed" + std::to_string(run.seed) + ".json"),
               manifest.dump(2) + "\n");
    result.runs[i] = std::move(run);
  };
  if (spec.workers <= 1) {
    for (std::size_t i = 0; i < spec.seeds.size(); ++i) work(i);
  } else {
    for (std::size_t start = 0; start < spec.seeds.size(); start += std::size_t(spec.workers)) {
      std::vector<std::future<void>> jobs;
      const std::size_t end = std::min(spec.seeds.size(), start + std::size_t(spec.workers));
      for (std::size_t i = start; i < end; ++i) jobs.push_back(std::async(std::launch::async, work, i));
      for (auto& j : jobs) j.get();
    }
  }
  std::vector<CurveFile> curves;
  for (const auto& r : result.runs) curves.push_back(read_curve(r.csv));
  result.aggregate_csv = spec.output / (stem + "_median.csv");
  write_curve(result.aggregate_csv, aggregate_median(curves));
  result.manifest = spec.output / (stem + "_manifest.json");
  write_text(result.manifest, spec_json(spec).dump(2) + "\n");
  return result;
}

std::size_t plot_export(const std::vector<std::filesystem::path>& inputs,
                        const std::filesystem::path& output) {
  if (inputs.empty()) throw ConfigError("plot_export needs at least one curve file");
  std::vector<CurveFile> curves;
  for (const auto& p : inputs) curves.push_back(read_curve(p));
  std::string text = "env,variant,seed,step,metric,value\n";
  std::size_t rows = 0;
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      for (int m = 0; m < kCurveMetricCount; ++m) {
        text += c.env + "," + c.variant + "," + c.seed + "," + std::to_string(p.step) + "," +
                kCurveMetrics[m] + "," + fmt(metric_of(p, m)) + "\n";
        ++rows;
      }
    }
  }
  write_text(output, text);
  return rows;
}

std::vector<TidyRow> read_tidy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  long n = 1;
  if (!std::getline(in, line) || line != "env,variant,seed,step,metric,value") {
    throw ParseError("missing or unexpected tidy header", 1);
  }
  std::vector<TidyRow> rows;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 6) throw ParseError("expected 6 fields", n);
    rows.push_back({cells[0], cells[1], cells[2], parse_long(cells[3], n), cells[4],
                    parse_number(cells[5], n)});
  }
  return rows;
}

}  // namespace modarc
