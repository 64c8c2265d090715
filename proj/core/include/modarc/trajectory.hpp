#pragma once

#include <deque>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "modarc/arcade_env.hpp"
#include "modarc/neural.hpp"

namespace modarc {

struct PredictorConfig {
  int history = 4;        // k: previous velocity vectors in the input
  int sensor_width = 8;   // m: probe pixels per sensor reading
  int rollout = 40;       // n: recursive prediction steps
  std::vector<int> trunk = {64, 64};
  int head_hidden = 32;
  int probe_reach = 4;    // probe ring distance beyond the shape's bounding radius
  int batch = 32;
  int updates_per_step = 4;
  std::size_t buffer = 10000;
  std::size_t warmup = 200;
  double max_speed = 16.0;  // larger per-step jumps are teleports, not motion
  double velocity_scale = 4.0;  // px per step mapped to 1.0 at the network boundary
  AdamConfig adam;

  int input_width() const { return history * (2 + sensor_width); }
  // Throws ConfigError on k, m or n < 1.
  void validate() const;
};

struct SensorVector {
  std::vector<std::uint8_t> bits;

  friend bool operator==(const SensorVector&, const SensorVector&) = default;
};

// Occupancy of every object except the one being forecast. Cells outside the
// playfield read as occupied.
class WorldSnapshot {
 public:
  WorldSnapshot(int width, int height);
  static WorldSnapshot from_state(const EnvState& state, int exclude_id);

  void add(const ShapeBitmap& shape, Vec2i anchor);
  bool occupied(int x, int y) const;
  int width() const { return width_; }
  int height() const { return height_; }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> cells_;
};

// Probe j sits on ring j / 8 in direction j % 8 (E, N, W, S, NE, NW, SW, SE);
// ring q lies `radius + 2q` pixels out in Chebyshev distance. Growing m only
// appends probes.
std::vector<Vec2i> probe_offsets(int m, int radius);

SensorVector sense(Vec2d pos, const WorldSnapshot& world, int m, int radius);

// [v_{t-k+1}, s_{t-k+1}, ..., v_t, s_t], oldest first.
Eigen::VectorXd build_input(std::span<const Vec2d> velocities,
                            std::span<const SensorVector> sensors);

struct RolloutState {
  Vec2d pos;
  std::deque<Vec2d> velocities;
  std::deque<SensorVector> sensors;
  std::vector<Vec2d> trajectory;
};

struct TrajectoryForecast {
  Vec2d start;
  std::vector<Vec2d> positions;
  std::vector<Vec2d> velocities;
  std::vector<bool> clamped;

  std::size_t size() const { return positions.size(); }
};

// Rolling (velocity, sensor) history of one tracked object, in agent steps.
class TrackedHistory {
 public:
  TrackedHistory(int history, int sensor_width);

  void clear();
  // Records the newest observation. When the previous step's input is
  // complete, returns the supervised pair (input at t-1, velocity at t).
  std::optional<std::pair<Eigen::VectorXd, Vec2d>> push(Vec2d position, Vec2d velocity,
                                                        SensorVector sensor, double max_speed);
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  Vec2d position() const { return position_; }
  // Seed for a rollout, zero-padded to k entries.
  RolloutState rollout_seed() const;

 private:
  int history_;
  int sensor_width_;
  std::deque<Vec2d> velocities_;
  std::deque<SensorVector> sensors_;
  Vec2d position_;
  std::size_t count_ = 0;
};

class TrajectoryPredictor {
 public:
  TrajectoryPredictor(PredictorConfig config, int probe_radius, std::uint64_t seed);

  const PredictorConfig& config() const { return config_; }
  int probe_radius() const { return probe_radius_; }
  const DenseNet& net() const { return net_; }
  DenseNet& net() { return net_; }

  // The heads output the change from the newest velocity in `input`, in
  // units of velocity_scale.
  Vec2d predict_velocity(const Eigen::VectorXd& input) const;
  TrajectoryForecast predict(const RolloutState& start, const WorldSnapshot& world) const;

  void add_sample(Eigen::VectorXd input, Vec2d target);
  std::size_t buffered() const { return inputs_.size(); }
  std::size_t samples_seen() const { return seen_; }

  // One batched update from the replay ring; nullopt when it is empty.
  std::optional<double> train_step(std::mt19937_64& rng);

  // Builds every supervised pair from an object's recorded history (one
  // world snapshot per recorded position, or a single shared snapshot),
  // stores them and applies one batched update. Returns nullopt when fewer
  // than k + 1 positions are recorded.
  std::optional<double> observe_and_train(const ObjectRecord& record,
                                          std::span<const WorldSnapshot> snapshots,
                                          std::mt19937_64& rng);

  // Mean squared error of the current net over the whole buffer.
  double buffer_loss() const;

 private:
  Eigen::VectorXd scaled(const Eigen::VectorXd& input) const;
  Vec2d newest_velocity(const Eigen::VectorXd& input) const;

  PredictorConfig config_;
  int probe_radius_;
  DenseNet net_;
  AdamState adam_;
  std::vector<Eigen::VectorXd> inputs_;
  std::vector<Vec2d> targets_;
  std::size_t next_ = 0;
  std::size_t seen_ = 0;
};

Topology predictor_topology(const PredictorConfig& config);

}  // namespace modarc
