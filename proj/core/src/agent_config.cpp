#include <cstdio>
#include <functional>
#include <set>

#include "modarc/agent.hpp"
#include "modarc/error.hpp"

namespace modarc {

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::learned: return "learned";
    case Policy::random: return "random";
    case Policy::tracker: return "tracker";
  }
  return "?";
}

Policy parse_policy(std::string_view name) {
  if (name == "learned") return Policy::learned;
  if (name == "random") return Policy::random;
  if (name == "tracker") return Policy::tracker;
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

void AgentConfig::validate() const {
  predictor.validate();
  controller.validate();
  if (frame_skip < 1) throw ConfigError("frame_skip must be >= 1");
  if (replan_every < 1) throw ConfigError("replan_every must be >= 1");
  if (goal_timeout < 1) throw ConfigError("goal_timeout must be >= 1");
  if (warmup_steps < 0 || coast_ticks < 0 || contact_margin < 0 || aim_margin < 0) {
    throw ConfigError("warmup, coast and margin must be >= 0");
  }
  if (practice_probability < 0 || practice_probability > 1) {
    throw ConfigError("practice_probability must lie in [0, 1]");
  }
  if (!(contact.tau > 0) || !(contact.tau_floor > 0) || contact.horizon < 1) {
    throw ConfigError("contact tau, tau_floor and horizon must be positive");
  }
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// Visits every tunable field with its config key.
template <class V>
void visit_fields(AgentConfig& c, V&& v) {
  auto& p = c.predictor;
  v("predictor.history", p.history);
  v("predictor.sensor_width", p.sensor_width);
  v("predictor.rollout", p.rollout);
  v("predictor.trunk", p.trunk);
  v("predictor.head_hidden", p.head_hidden);
  v("predictor.probe_reach", p.probe_reach);
  v("predictor.batch", p.batch);
  v("predictor.buffer", p.buffer);
  v("predictor.warmup", p.warmup);
  v("predictor.max_speed", p.max_speed);
  v("predictor.velocity_scale", p.velocity_scale);
  v("predictor.updates_per_step", p.updates_per_step);
  v("predictor.learning_rate", p.adam.learning_rate);
  auto& g = c.controller;
  v("controller.history", g.history);
  v("controller.goal_radius", g.goal_radius);
  v("controller.gamma", g.gamma);
  v("controller.target_sync", g.target_sync);
  v("controller.capacity", g.capacity);
  v("controller.batch", g.batch);
  v("controller.epsilon_start", g.epsilon_start);
  v("controller.epsilon_end", g.epsilon_end);
  v("controller.epsilon_steps", g.epsilon_steps);
  v("controller.trunk", g.trunk);
  v("controller.her_future", g.her_future);
  v("controller.use_her", g.use_her);
  v("controller.learning_rate", g.adam.learning_rate);
  auto& k = c.contact;
  v("contact.horizon", k.horizon);
  v("contact.prior", k.prior);
  v("contact.kernel_radius", k.kernel_radius);
  v("contact.tau", k.tau);
  v("contact.tau_decay", k.tau_decay);
  v("contact.tau_floor", k.tau_floor);
  v("agent.policy", c.policy);
  v("agent.frame_skip", c.frame_skip);
  v("agent.replan_every", c.replan_every);
  v("agent.replan_threshold", c.replan_threshold);
  v("agent.warmup_steps", c.warmup_steps);
  v("agent.coast_ticks", c.coast_ticks);
  v("agent.goal_timeout", c.goal_timeout);
  v("agent.practice_probability", c.practice_probability);
  v("agent.contact_margin", c.contact_margin);
  v("agent.aim_margin", c.aim_margin);
  v("agent.snap_limit", c.snap_limit);
  v("agent.use_pixels", c.use_pixels);
}

struct Loader {
  const KvConfig& cfg;
  std::set<std::string>& used;

  bool take(const char* key) {
    if (!cfg.has(key)) return false;
    used.insert(key);
    return true;
  }
  void operator()(const char* key, int& f) {
    if (take(key)) f = static_cast<int>(cfg.get_int(key, f));
  }
  void operator()(const char* key, long& f) {
    if (take(key)) f = cfg.get_int(key, f);
  }
  void operator()(const char* key, std::size_t& f) {
    if (!take(key)) return;
    const long v = cfg.get_int(key, 0);
    if (v < 0) throw ConfigError(std::string(key) + " must be >= 0");
    f = static_cast<std::size_t>(v);
  }
  void operator()(const char* key, double& f) {
    if (take(key)) f = cfg.get_double(key, f);
  }
  void operator()(const char* key, bool& f) {
    if (take(key)) f = cfg.get_bool(key, f);
  }
  void operator()(const char* key, std::vector<int>& f) {
    if (!take(key)) return;
    f.clear();
    for (long x : cfg.get_int_list(key, {})) f.push_back(static_cast<int>(x));
  }
  void operator()(const char* key, Policy& f) {
    if (take(key)) f = parse_policy(cfg.get_string(key, ""));
  }
};

struct Describer {
  std::vector<std::pair<std::string, std::string>>& out;

  void operator()(const char* key, int f) { out.emplace_back(key, std::to_string(f)); }
  void operator()(const char* key, long f) { out.emplace_back(key, std::to_string(f)); }
  void operator()(const char* key, std::size_t f) { out.emplace_back(key, std::to_string(f)); }
  void operator()(const char* key, double f) { out.emplace_back(key, fmt_double(f)); }
  void operator()(const char* key, bool f) { out.emplace_back(key, f ? "true" : "false"); }
  void operator()(const char* key, const std::vector<int>& f) { out.emplace_back(key, fmt_list(f)); }
  void operator()(const char* key, Policy f) { out.emplace_back(key, std::string(to_string(f))); }
};

}  // namespace

AgentConfig load_agent_config(const KvConfig& cfg, AgentConfig base) {
  std::set<std::string> used;
  visit_fields(base, Loader{cfg, used});
  for (const auto& [key, value] : cfg.entries()) {
    if (!used.count(key)) throw ConfigError("unknown agent config key '" + key + "'");
  }
  base.validate();
  return base;
}

std::vector<std::pair<std::string, std::string>> describe(const AgentConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  AgentConfig copy = config;
  visit_fields(copy, Describer{out});
  return out;
}

}  // namespace modarc
