#include "modarc/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "modarc/error.hpp"

namespace modarc {

void PredictorConfig::validate() const {
  if (history < 1) throw ConfigError("predictor history k must be >= 1");
  if (sensor_width < 1) throw ConfigError("sensor width m must be >= 1");
  if (rollout < 1) throw ConfigError("rollout length n must be >= 1");
  if (batch < 1 || buffer < 1 || updates_per_step < 1)
    throw ConfigError("predictor batch, buffer and updates_per_step must be >= 1");
  if (!(velocity_scale > 0)) throw ConfigError("velocity_scale must be > 0");
}

Topology predictor_topology(const PredictorConfig& c) {
  return {c.input_width(), c.trunk, {{"vx", c.head_hidden, 1}, {"vy", c.head_hidden, 1}}};
}

WorldSnapshot::WorldSnapshot(int width, int height)
    : width_(width), height_(height), cells_(std::size_t(width) * std::size_t(height), 0) {}

WorldSnapshot WorldSnapshot::from_state(const EnvState& state, int exclude_id) {
  WorldSnapshot w(state.layout.width, state.layout.height);
  for (const auto& [id, obj] : state.objects) {
    if (id != exclude_id) w.add(obj.shape, obj.anchor);
  }
  return w;
}

void WorldSnapshot::add(const ShapeBitmap& shape, Vec2i anchor) {
  for (int y = 0; y < shape.height(); ++y) {
    for (int x = 0; x < shape.width(); ++x) {
      const int px = anchor.x + x, py = anchor.y + y;
      if (shape.at(x, y) && px >= 0 && py >= 0 && px < width_ && py < height_) {
        cells_[std::size_t(py) * width_ + px] = 1;
      }
    }
  }
}

bool WorldSnapshot::occupied(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return true;
  return cells_[std::size_t(y) * width_ + x] != 0;
}

std::vector<Vec2i> probe_offsets(int m, int radius) {
  static constexpr Vec2i dirs[8] = {{1, 0},  {0, -1}, {-1, 0}, {0, 1},
                                    {1, -1}, {-1, -1}, {-1, 1}, {1, 1}};
  std::vector<Vec2i> out;
  out.reserve(std::max(m, 0));
  for (int j = 0; j < m; ++j) {
    const int r = radius + 2 * (j / 8);
    const Vec2i d = dirs[j % 8];
    out.push_back({d.x * r, d.y * r});
  }
  return out;
}

SensorVector sense(Vec2d pos, const WorldSnapshot& world, int m, int radius) {
  const Vec2i c = round_to_pixel(pos);
  SensorVector s;
  s.bits.reserve(m);
  for (Vec2i o : probe_offsets(m, radius)) {
    s.bits.push_back(world.occupied(c.x + o.x, c.y + o.y) ? 1 : 0);
  }
  return s;
}

Eigen::VectorXd build_input(std::span<const Vec2d> velocities,
                            std::span<const SensorVector> sensors) {
  if (velocities.size() != sensors.size() || velocities.empty()) {
    throw ShapeError("velocity and sensor queues must have equal nonzero length");
  }
  const std::size_t m = sensors.front().bits.size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(velocities.size() * (2 + m)));
  Eigen::Index i = 0;
  for (std::size_t t = 0; t < velocities.size(); ++t) {
    if (sensors[t].bits.size() != m) throw ShapeError("sensor readings differ in width");
    out[i++] = velocities[t].x;
    out[i++] = velocities[t].y;
    for (auto b : sensors[t].bits) out[i++] = b;
  }
  return out;
}

TrackedHistory::TrackedHistory(int history, int sensor_width)
    : history_(history), sensor_width_(sensor_width) {}

void TrackedHistory::clear() {
  velocities_.clear();
  sensors_.clear();
  count_ = 0;
}

RolloutState TrackedHistory::rollout_seed() const {
  RolloutState st;
  st.pos = position_;
  st.velocities = velocities_;
  st.sensors = sensors_;
  while (static_cast<int>(st.velocities.size()) < history_) {
    st.velocities.push_front({0.0, 0.0});
    st.sensors.push_front({std::vector<std::uint8_t>(sensor_width_, 0)});
  }
  return st;
}

std::optional<std::pair<Eigen::VectorXd, Vec2d>> TrackedHistory::push(Vec2d position,
                                                                      Vec2d velocity,
                                                                      SensorVector sensor,
                                                                      double max_speed) {
  if (std::abs(velocity.x) > max_speed || std::abs(velocity.y) > max_speed) {
    // Teleport (respawn): restart from the new position with unknown velocity.
    clear();
    velocity = {0.0, 0.0};
  }
  std::optional<std::pair<Eigen::VectorXd, Vec2d>> pair;
  // The first entry after a restart carries no real velocity, so pairs start
  // once the queue holds at least one observed displacement.
  if (count_ >= 2) {
    const RolloutState prev = rollout_seed();
    std::vector<Vec2d> v(prev.velocities.begin(), prev.velocities.end());
    std::vector<SensorVector> s(prev.sensors.begin(), prev.sensors.end());
    pair.emplace(build_input(v, s), velocity);
  }
  position_ = position;
  velocities_.push_back(count_ == 0 ? Vec2d{} : velocity);
  sensors_.push_back(std::move(sensor));
  while (static_cast<int>(velocities_.size()) > history_) {
    velocities_.pop_front();
    sensors_.pop_front();
  }
  ++count_;
  return pair;
}

TrajectoryPredictor::TrajectoryPredictor(PredictorConfig config, int probe_radius,
                                         std::uint64_t seed)
    : config_((config.validate(), std::move(config))),
      probe_radius_(probe_radius),
      net_(predictor_topology(config_), seed),
      adam_(AdamState::for_net(net_)) {}

Eigen::VectorXd TrajectoryPredictor::scaled(const Eigen::VectorXd& input) const {
  Eigen::VectorXd out = input;
  const int stride = 2 + config_.sensor_width;
  for (int t = 0; t < config_.history; ++t) {
    out[t * stride] /= config_.velocity_scale;
    out[t * stride + 1] /= config_.velocity_scale;
  }
  return out;
}

Vec2d TrajectoryPredictor::newest_velocity(const Eigen::VectorXd& input) const {
  const int at = (config_.history - 1) * (2 + config_.sensor_width);
  return {input[at], input[at + 1]};
}

Vec2d TrajectoryPredictor::predict_velocity(const Eigen::VectorXd& input) const {
  const auto out = net_.forward_batch(scaled(input).transpose());
  const Vec2d base = newest_velocity(input);
  return {base.x + config_.velocity_scale * out[0](0, 0),
          base.y + config_.velocity_scale * out[1](0, 0)};
}

TrajectoryForecast TrajectoryPredictor::predict(const RolloutState& start,
                                                const WorldSnapshot& world) const {
  const int k = config_.history;
  if (static_cast<int>(start.velocities.size()) != k ||
      static_cast<int>(start.sensors.size()) != k) {
    throw ShapeError("rollout seed queues must hold exactly k entries");
  }
  RolloutState st = start;
  TrajectoryForecast fc;
  fc.start = start.pos;
  const Rect field{0, 0, world.width() - 1, world.height() - 1};
  std::vector<Vec2d> v(st.velocities.begin(), st.velocities.end());
  std::vector<SensorVector> s(st.sensors.begin(), st.sensors.end());
  for (int i = 0; i < config_.rollout; ++i) {
    const Vec2d predicted = predict_velocity(build_input(v, s));
    const Vec2d raw = st.pos + predicted;
    const Vec2d next = field.clamp(raw);
    const Vec2d applied = next - st.pos;
    // velocity queue, anterior position, trajectory stack, sensor queue
    v.erase(v.begin());
    v.push_back(applied);
    st.pos = next;
    st.trajectory.push_back(next);
    s.erase(s.begin());
    s.push_back(sense(next, world, config_.sensor_width, probe_radius_));

    fc.positions.push_back(next);
    fc.velocities.push_back(applied);
    fc.clamped.push_back(!(raw == next));
  }
  return fc;
}

void TrajectoryPredictor::add_sample(Eigen::VectorXd input, Vec2d target) {
  if (input.size() != config_.input_width()) throw ShapeError("predictor sample width");
  ++seen_;
  if (inputs_.size() < config_.buffer) {
    inputs_.push_back(std::move(input));
    targets_.push_back(target);
    return;
  }
  inputs_[next_] = std::move(input);
  targets_[next_] = target;
  next_ = (next_ + 1) % config_.buffer;
}

std::optional<double> TrajectoryPredictor::train_step(std::mt19937_64& rng) {
  if (inputs_.empty()) return std::nullopt;
  const int b = config_.batch;
  TrainBatch batch;
  batch.inputs.resize(b, config_.input_width());
  batch.targets = {Eigen::MatrixXd(b, 1), Eigen::MatrixXd(b, 1)};
  std::uniform_int_distribution<std::size_t> pick(0, inputs_.size() - 1);
  for (int i = 0; i < b; ++i) {
    const std::size_t j = pick(rng);
    batch.inputs.row(i) = scaled(inputs_[j]).transpose();
    const Vec2d base = newest_velocity(inputs_[j]);
    batch.targets[0](i, 0) = (targets_[j].x - base.x) / config_.velocity_scale;
    batch.targets[1](i, 0) = (targets_[j].y - base.y) / config_.velocity_scale;
  }
  auto result = backward(net_, batch);
  apply_update(net_, result.gradients, adam_, config_.adam);
  return result.loss;
}

std::optional<double> TrajectoryPredictor::observe_and_train(
    const ObjectRecord& record, std::span<const WorldSnapshot> snapshots,
    std::mt19937_64& rng) {
  const auto& pos = record.position_history;
  if (static_cast<int>(pos.size()) < config_.history + 1 || snapshots.empty()) {
    return std::nullopt;
  }
  if (snapshots.size() != 1 && snapshots.size() != pos.size()) {
    throw ShapeError("need one world snapshot per recorded position or a single shared one");
  }
  TrackedHistory hist(config_.history, config_.sensor_width);
  for (std::size_t t = 0; t < pos.size(); ++t) {
    const Vec2d p(pos[t]);
    const Vec2d v = t == 0 ? Vec2d{} : Vec2d(record.velocity_history[t - 1]);
    const auto& world = snapshots.size() == 1 ? snapshots[0] : snapshots[t];
    auto pair = hist.push(p, v, sense(p, world, config_.sensor_width, probe_radius_),
                          config_.max_speed);
    if (pair) add_sample(std::move(pair->first), pair->second);
  }
  return train_step(rng);
}

double TrajectoryPredictor::buffer_loss() const {
  if (inputs_.empty()) return 0.0;
  Eigen::MatrixXd in(static_cast<Eigen::Index>(inputs_.size()), config_.input_width());
  for (std::size_t i = 0; i < inputs_.size(); ++i) in.row(Eigen::Index(i)) = scaled(inputs_[i]).transpose();
  const auto out = net_.forward_batch(in);
  double total = 0.0;
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    const Vec2d base = newest_velocity(inputs_[i]);
    const double sc = config_.velocity_scale;
    const double ex = base.x + sc * out[0](Eigen::Index(i), 0) - targets_[i].x;
    const double ey = base.y + sc * out[1](Eigen::Index(i), 0) - targets_[i].y;
    total += ex * ex + ey * ey;
  }
  return total / static_cast<double>(inputs_.size());
}

}  // namespace modarc
