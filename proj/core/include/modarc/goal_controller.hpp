#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "modarc/geometry.hpp"
#include "modarc/neural.hpp"

namespace modarc {

struct ControllerConfig {
  int history = 4;           // k previous actions in the observation
  double goal_radius = 2.0;  // rho, pixels
  double gamma = 0.98;
  int target_sync = 200;     // updates between target-network copies
  std::size_t capacity = 50000;
  int batch = 64;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  long epsilon_steps = 5000;
  std::vector<int> trunk = {64, 64};
  int her_future = 4;
  bool use_her = true;
  AdamConfig adam;

  void validate() const;
};

struct GoalObservation {
  Vec2d current;  // center of the controllable shape
  Vec2d goal;
  std::vector<int> action_history;  // oldest first, exactly k entries

  friend bool operator==(const GoalObservation&, const GoalObservation&) = default;
};

struct GoalTransition {
  GoalObservation observation;
  int action = 0;
  double reward = 0.0;
  GoalObservation next;
  bool done = false;  // last transition of its goal episode

  friend bool operator==(const GoalTransition&, const GoalTransition&) = default;
};

// Fixed-capacity ring of transitions with uniform sampling.
class ReplayStore {
 public:
  explicit ReplayStore(std::size_t capacity);

  void push(GoalTransition t);
  void push_episode(std::span<const GoalTransition> episode);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const GoalTransition& at(std::size_t i) const { return items_.at(i); }
  std::size_t episodes() const { return episodes_; }

  std::vector<std::size_t> sample_indices(std::size_t n, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::vector<GoalTransition> items_;
  std::size_t next_ = 0;
  std::size_t episodes_ = 0;
};

class GoalController {
 public:
  GoalController(ControllerConfig config, std::vector<std::string> actions, Rect playfield,
                 std::uint64_t seed);

  const ControllerConfig& config() const { return config_; }
  const std::vector<std::string>& actions() const { return actions_; }
  int action_count() const { return static_cast<int>(actions_.size()); }
  const Rect& playfield() const { return playfield_; }

  const DenseNet& net() const { return net_; }
  DenseNet& net() { return net_; }
  const DenseNet& target_net() const { return target_; }
  long updates() const { return updates_; }

  // Positions scaled to [-1, 1] by playfield extent, then k one-hot actions.
  Eigen::VectorXd encode(const GoalObservation& obs) const;
  Eigen::VectorXd action_values(const GoalObservation& obs) const;
  int greedy(const GoalObservation& obs) const;
  int act(const GoalObservation& obs, double epsilon, std::mt19937_64& rng) const;
  double epsilon_at(long step) const;

  double reward_for(Vec2d achieved, Vec2d goal) const;
  GoalObservation initial_observation(Vec2d current, Vec2d goal) const;

  // Originals plus "future"-strategy copies whose goal is a position
  // achieved later in the same episode; duplicate substitutions collapse.
  std::vector<GoalTransition> relabel_episode(std::span<const GoalTransition> episode,
                                              std::mt19937_64& rng) const;

  // One temporal-difference update; nullopt when the store is smaller than
  // the batch size. Returns the pre-update batch loss.
  std::optional<double> learn_step(const ReplayStore& store, std::mt19937_64& rng);

  // Bootstrapped targets for the given transitions. Reaching the goal is
  // absorbing: reward 1 transitions target exactly 1.
  std::vector<double> td_targets(std::span<const GoalTransition* const> batch) const;
  double td_loss(std::span<const GoalTransition* const> batch) const;

  // Network checkpoint plus a `<path>.hdr` key-value sidecar.
  void save(const std::filesystem::path& path) const;
  static GoalController load(const std::filesystem::path& path, ControllerConfig config,
                             Rect playfield);

 private:
  TrainBatch make_batch(std::span<const GoalTransition* const> batch) const;

  ControllerConfig config_;
  std::vector<std::string> actions_;
  Rect playfield_;
  DenseNet net_;
  DenseNet target_;
  AdamState adam_;
  long updates_ = 0;
};

Topology controller_topology(const ControllerConfig& config, int action_count);

}  // namespace modarc
