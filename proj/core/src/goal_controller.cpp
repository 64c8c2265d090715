#include "modarc/goal_controller.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "modarc/error.hpp"
#include "modarc/kv_config.hpp"

namespace modarc {

void ControllerConfig::validate() const {
  if (history < 1) throw ConfigError("controller history must be >= 1");
  if (!(goal_radius > 0)) throw ConfigError("goal radius must be > 0");
  if (!(gamma >= 0 && gamma < 1)) throw ConfigError("gamma must lie in [0, 1)");
  if (batch < 1 || capacity < 1 || target_sync < 1) {
    throw ConfigError("controller batch, capacity and target sync must be >= 1");
  }
  if (her_future < 0) throw ConfigError("her_future must be >= 0");
}

Topology controller_topology(const ControllerConfig& c, int action_count) {
  return {4 + c.history * action_count, c.trunk, {{"q", 0, action_count}}};
}

ReplayStore::ReplayStore(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("replay capacity must be >= 1");
  items_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayStore::push(GoalTransition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[next_] = std::move(t);
  next_ = (next_ + 1) % capacity_;
}

void ReplayStore::push_episode(std::span<const GoalTransition> episode) {
  for (const auto& t : episode) push(t);
  ++episodes_;
}

std::vector<std::size_t> ReplayStore::sample_indices(std::size_t n,
                                                     std::mt19937_64& rng) const {
  std::vector<std::size_t> out;
  if (items_.empty()) return out;
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pick(rng));
  return out;
}

GoalController::GoalController(ControllerConfig config, std::vector<std::string> actions,
                               Rect playfield, std::uint64_t seed)
    : config_((config.validate(), std::move(config))),
      actions_(std::move(actions)),
      playfield_(playfield),
      net_(controller_topology(config_, static_cast<int>(actions_.size())), seed),
      target_(net_),
      adam_(AdamState::for_net(net_)) {
  if (actions_.empty()) throw ConfigError("controller needs a nonempty action set");
  if (playfield_.is_empty()) throw ConfigError("controller needs a playfield");
}

Eigen::VectorXd GoalController::encode(const GoalObservation& obs) const {
  const int a = action_count();
  if (static_cast<int>(obs.action_history.size()) != config_.history) {
    throw ShapeError("action history must hold exactly k entries");
  }
  Eigen::VectorXd x = Eigen::VectorXd::Zero(4 + config_.history * a);
  const double sx = 2.0 / std::max(1, playfield_.width() - 1);
  const double sy = 2.0 / std::max(1, playfield_.height() - 1);
  x[0] = (obs.current.x - playfield_.x0) * sx - 1.0;
  x[1] = (obs.current.y - playfield_.y0) * sy - 1.0;
  x[2] = (obs.goal.x - playfield_.x0) * sx - 1.0;
  x[3] = (obs.goal.y - playfield_.y0) * sy - 1.0;
  for (int i = 0; i < config_.history; ++i) {
    const int act = obs.action_history[i];
    if (act < 0 || act >= a) throw ShapeError("action index out of range");
    x[4 + i * a + act] = 1.0;
  }
  return x;
}

Eigen::VectorXd GoalController::action_values(const GoalObservation& obs) const {
  return net_.forward_batch(encode(obs).transpose())[0].row(0).transpose();
}

int GoalController::greedy(const GoalObservation& obs) const {
  const Eigen::VectorXd q = action_values(obs);
  int best = 0;
  for (int i = 1; i < q.size(); ++i)
    if (q[i] > q[best]) best = i;
  return best;
}

int GoalController::act(const GoalObservation& obs, double epsilon,
                        std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (epsilon > 0.0 && coin(rng) < epsilon) {
    std::uniform_int_distribution<int> pick(0, action_count() - 1);
    return pick(rng);
  }
  return greedy(obs);
}

double GoalController::epsilon_at(long step) const {
  if (step >= config_.epsilon_steps) return config_.epsilon_end;
  const double frac = double(step) / double(std::max(1L, config_.epsilon_steps));
  return config_.epsilon_start + frac * (config_.epsilon_end - config_.epsilon_start);
}

double GoalController::reward_for(Vec2d achieved, Vec2d goal) const {
  return distance(achieved, goal) <= config_.goal_radius ? 1.0 : 0.0;
}

GoalObservation GoalController::initial_observation(Vec2d current, Vec2d goal) const {
  return {current, goal, std::vector<int>(std::size_t(config_.history), 0)};
}

std::vector<GoalTransition> GoalController::relabel_episode(
    std::span<const GoalTransition> episode, std::mt19937_64& rng) const {
  std::vector<GoalTransition> out(episode.begin(), episode.end());
  const std::size_t n = episode.size();
  for (std::size_t t = 0; t < n; ++t) {
    std::uniform_int_distribution<std::size_t> pick(t, n - 1);
    std::set<std::size_t> chosen;
    for (int i = 0; i < config_.her_future; ++i) chosen.insert(pick(rng));
    for (std::size_t j : chosen) {
      GoalTransition copy = episode[t];
      const Vec2d g = episode[j].next.current;
      copy.observation.goal = g;
      copy.next.goal = g;
      copy.reward = reward_for(copy.next.current, g);
      out.push_back(std::move(copy));
    }
  }
  return out;
}

std::vector<double> GoalController::td_targets(
    std::span<const GoalTransition* const> batch) const {
  std::vector<double> targets;
  targets.reserve(batch.size());
  Eigen::MatrixXd next(static_cast<Eigen::Index>(batch.size()), net_.input_width());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    next.row(Eigen::Index(i)) = encode(batch[i]->next).transpose();
  }
  const Eigen::MatrixXd q_next = target_.forward_batch(next)[0];
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = *batch[i];
    const bool absorbing = t.reward >= 1.0;
    // Returns lie in [0, 1]; bounding the bootstrap stops overestimation drift.
    const double next_value = std::clamp(q_next.row(Eigen::Index(i)).maxCoeff(), 0.0, 1.0);
    targets.push_back(absorbing ? t.reward : t.reward + config_.gamma * next_value);
  }
  return targets;
}

TrainBatch GoalController::make_batch(std::span<const GoalTransition* const> batch) const {
  const auto n = static_cast<Eigen::Index>(batch.size());
  TrainBatch tb;
  tb.inputs.resize(n, net_.input_width());
  for (Eigen::Index i = 0; i < n; ++i) tb.inputs.row(i) = encode(batch[i]->observation).transpose();
  const auto targets = td_targets(batch);
  tb.targets = {Eigen::MatrixXd::Zero(n, action_count())};
  tb.weights = {Eigen::MatrixXd::Zero(n, action_count())};
  for (Eigen::Index i = 0; i < n; ++i) {
    tb.targets[0](i, batch[i]->action) = targets[std::size_t(i)];
    tb.weights[0](i, batch[i]->action) = 1.0;
  }
  return tb;
}

double GoalController::td_loss(std::span<const GoalTransition* const> batch) const {
  return backward(net_, make_batch(batch)).loss;
}

std::optional<double> GoalController::learn_step(const ReplayStore& store,
                                                 std::mt19937_64& rng) {
  if (store.size() < static_cast<std::size_t>(config_.batch)) return std::nullopt;
  std::vector<const GoalTransition*> batch;
  for (auto i : store.sample_indices(std::size_t(config_.batch), rng)) batch.push_back(&store.at(i));
  auto result = backward(net_, make_batch(batch));
  apply_update(net_, result.gradients, adam_, config_.adam);
  if (++updates_ % config_.target_sync == 0) target_ = net_;
  return result.loss;
}

void GoalController::save(const std::filesystem::path& path) const {
  save_checkpoint(path, net_);
  std::ofstream hdr(path.string() + ".hdr");
  if (!hdr) throw IoError("cannot write controller header for " + path.string());
  std::string labels;
  for (std::size_t i = 0; i < actions_.size(); ++i) labels += (i ? "," : "") + actions_[i];
  hdr << "k = " << config_.history << "\n"
      << "rho = " << config_.goal_radius << "\n"
      << "gamma = " << config_.gamma << "\n"
      << "actions = " << labels << "\n";
}

GoalController GoalController::load(const std::filesystem::path& path, ControllerConfig config,
                                    Rect playfield) {
  const auto hdr = KvConfig::load(path.string() + ".hdr");
  config.history = static_cast<int>(hdr.get_int("k", config.history));
  config.goal_radius = hdr.get_double("rho", config.goal_radius);
  config.gamma = hdr.get_double("gamma", config.gamma);
  std::vector<std::string> actions;
  std::string list = hdr.get_string("actions", "");
  std::size_t start = 0;
  while (start <= list.size()) {
    auto comma = list.find(',', start);
    if (comma == std::string::npos) comma = list.size();
    if (comma > start) actions.push_back(list.substr(start, comma - start));
    start = comma + 1;
  }
  GoalController ctrl(config, actions, playfield, 0);
  ctrl.net_ = load_checkpoint(path, controller_topology(ctrl.config_, ctrl.action_count()));
  ctrl.target_ = ctrl.net_;
  ctrl.adam_ = AdamState::for_net(ctrl.net_);
  return ctrl;
}

}  // namespace modarc
