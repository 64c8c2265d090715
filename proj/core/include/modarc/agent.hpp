#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "modarc/arcade_env.hpp"
#include "modarc/contact_reward.hpp"
#include "modarc/env_io.hpp"
#include "modarc/goal_controller.hpp"
#include "modarc/kv_config.hpp"
#include "modarc/pixel.hpp"
#include "modarc/trajectory.hpp"

namespace modarc {

enum class Policy { learned, random, tracker };

std::string_view to_string(Policy p);
Policy parse_policy(std::string_view name);

struct AgentConfig {
  PredictorConfig predictor;
  ControllerConfig controller;
  ContactConfig contact;
  Policy policy = Policy::learned;
  int frame_skip = 2;
  int replan_every = 8;             // agent ticks between forecasts
  double replan_threshold = 3.0;    // px of forecast error that forces a replan
  long warmup_steps = 500;          // random actions before goals are issued
  int coast_ticks = 5;              // pixel mode: ticks to coast a lost object
  int goal_timeout = 60;            // ticks before an unreached goal is dropped
  double practice_probability = 0.5;
  int contact_margin = 4;           // px added around the accessible area
  int aim_margin = 2;               // px kept between the aimed contact and the shape edge
  std::size_t snap_limit = 16;      // snap goals to seen positions when this few exist
  bool use_pixels = false;

  void validate() const;
};

// Applies `key = value` overrides (predictor.*, controller.*, contact.*,
// agent.*). Unknown keys are a ConfigError.
AgentConfig load_agent_config(const KvConfig& cfg, AgentConfig base = {});
// Flat key-value dump covering every field, for run manifests.
std::vector<std::pair<std::string, std::string>> describe(const AgentConfig& config);

struct GoalCommand {
  Vec2d goal;
  long intercept = 0;  // forecast step index of the intersection
  Vec2d offset;        // effective contact offset: goal + offset = intersection
  Vec2d intersection;
  long forecast_id = 0;
};

// The area where the controllable can meet another object: its observed
// area grown by the two shapes' half extents plus `margin`.
Rect interaction_area(const ObjectRecord& controllable, Vec2i other_half_extent, int margin);

// Earliest forecast position inside `area` that is still approaching the
// controllable; the goal is that position projected into the observed area
// minus the contact offset. The offset is shifted when needed to keep the
// goal inside the observed area.
std::optional<GoalCommand> compute_goal(const TrajectoryForecast& forecast,
                                        const ObjectRecord& controllable, Vec2d offset,
                                        const Rect& area, long forecast_id = 0);
std::optional<GoalCommand> compute_goal(const TrajectoryForecast& forecast,
                                        const ObjectRecord& controllable, Vec2d offset);

struct StepEvents {
  std::vector<RewardEvent> rewards;
  std::vector<ContactEvent> contacts;
};

// The agent's view of the world: controllable, ball and everything else as
// an occupancy grid.
class ObjectRegistry {
 public:
  void reset();
  void update(const EnvState& state);
  void update(const Frame& frame, const Frame* prev, const std::vector<ShapeTemplate>& templates,
              std::size_t history_capacity, int coast_ticks);

  const ObjectRecord* controllable() const { return controllable_ ? &*controllable_ : nullptr; }
  const ObjectRecord* ball() const { return ball_ && !ball_absent_ ? &*ball_ : nullptr; }
  const WorldSnapshot& world() const { return world_; }
  bool ball_absent() const { return ball_absent_; }
  int coasting() const { return coasting_; }

 private:
  std::optional<ObjectRecord> controllable_;
  std::optional<ObjectRecord> ball_;
  WorldSnapshot world_{0, 0};
  bool ball_absent_ = false;
  int coasting_ = 0;
};

struct AgentTotals {
  long ticks = 0;
  long hits = 0;
  long misses = 0;
  long goal_episodes = 0;
  long goals_reached = 0;
  long rallies_scored = 0;    // interceptions judged against a forecast goal
  long rallies_on_goal = 0;   // ... with the controllable within rho of it
  double predictor_loss = 0.0;
  long predictor_updates = 0;
  double controller_loss = 0.0;
  long controller_updates = 0;
};

class Agent {
 public:
  Agent(EnvName env, AgentConfig config, std::uint64_t seed);
  Agent(EnvName env, const EnvLayout& layout, AgentConfig config, std::uint64_t seed);

  EnvName env() const { return env_; }
  const EnvLayout& layout() const { return layout_; }
  const AgentConfig& config() const { return config_; }
  bool training() const { return training_; }
  void set_training(bool on) { training_ = on; }

  void begin_episode();
  std::string tick(const EnvState& state, const StepEvents& events);
  std::string tick(const Frame& frame, const StepEvents& events);
  // Closes open goal and contact bookkeeping with the final step's events.
  void end_episode(const StepEvents& events, long final_tick);

  const std::optional<GoalCommand>& active_goal() const { return goal_; }
  const std::optional<TrajectoryForecast>& forecast() const { return forecast_; }
  const ObjectRegistry& registry() const { return registry_; }
  const Rect& accessible_area() const { return accessible_; }
  const TrajectoryPredictor& predictor() const { return predictor_; }
  TrajectoryPredictor& predictor() { return predictor_; }
  const GoalController& controller() const { return controller_; }
  GoalController& controller() { return controller_; }
  const ContactRewardTable& contacts() const { return contacts_; }
  const ReplayStore& replay() const { return replay_; }
  const AgentTotals& totals() const { return totals_; }
  void reset_totals() { totals_ = {}; }
  long lifetime_ticks() const { return lifetime_ticks_; }
  double temperature() const;
  std::uint64_t hash() const;

  // JSON-lines debug log, one object per tick; null disables it.
  void set_debug_log(std::ostream* out) { debug_ = out; }

  // Directory holding predictor, controller and contact-table state.
  void save(const std::filesystem::path& dir) const;
  void load(const std::filesystem::path& dir);

 private:
  std::string decide(long env_tick, const StepEvents& events);
  std::string baseline_action();
  void track_ball();
  void handle_events(long env_tick, const StepEvents& events);
  void replan(long env_tick);
  void choose_fallback_goal();
  // Nearest visited position; with a contact point, the visited pose whose
  // pixels come closest to it wins and centre distance breaks ties.
  Vec2d snap(Vec2d goal, std::optional<Vec2d> contact = std::nullopt) const;
  void close_goal_episode();
  void record_transition(Vec2d now);
  void log_tick(long env_tick, const std::string& action);

  EnvName env_;
  EnvLayout layout_;
  AgentConfig config_;
  std::mt19937_64 rng_;
  bool training_ = true;

  std::vector<ShapeTemplate> templates_;
  std::optional<Frame> prev_frame_;
  ObjectRegistry registry_;

  TrajectoryPredictor predictor_;
  TrackedHistory ball_track_;
  GoalController controller_;
  ReplayStore replay_;
  ContactRewardTable contacts_;

  std::optional<TrajectoryForecast> forecast_;
  long forecast_tick_ = 0;
  long forecast_count_ = 0;
  std::optional<GoalCommand> goal_;
  bool goal_from_forecast_ = false;
  std::optional<Vec2d> pending_offset_;
  std::optional<Vec2d> fallback_goal_;
  long goal_age_ = 0;

  std::deque<int> action_history_;
  std::optional<GoalObservation> last_obs_;
  int last_action_ = 0;
  std::optional<Vec2d> prev_position_;
  std::map<std::pair<int, int>, int> stay_action_;  // action last seen keeping a position
  std::vector<GoalTransition> goal_episode_;
  std::map<std::pair<int, int>, std::vector<Vec2i>> seen_positions_;  // centre -> occupied pixels
  Rect accessible_;  // union of the controllable's observed areas over the agent's life

  long episode_ticks_ = 0;
  long episodes_ = 0;
  long lifetime_ticks_ = 0;
  long controller_ticks_ = 0;
  AgentTotals totals_;
  std::ostream* debug_ = nullptr;
  std::string last_action_label_;
};

struct EpisodeSummary {
  double score = 0.0;
  long steps = 0;
  long hits = 0;
  long misses = 0;
  double interception_rate = 0.0;
  long rallies = 0;
  double mean_rally_length = 0.0;  // hits per rally
  double predictor_loss = 0.0;
  double controller_loss = 0.0;
  double goal_success = 0.0;
  bool terminal = false;

  friend bool operator==(const EpisodeSummary&, const EpisodeSummary&) = default;
};

// Plays one seeded episode of at most `budget` agent steps. Throws
// ConfigError when budget < 1.
EpisodeSummary run_episode(EnvName env, Agent& agent, long budget, std::uint64_t seed,
                           EventLog* log = nullptr);

// Goal-reaching drill on random goals in the controllable's accessible
// area; returns the greedy success rate over `probes` fresh goals.
struct DrillResult {
  double success = 0.0;
  long steps = 0;
  std::optional<GoalController> controller;
};
DrillResult goal_reaching_drill(EnvName env, const AgentConfig& config, long train_steps,
                                int probes, std::uint64_t seed);

}  // namespace modarc
