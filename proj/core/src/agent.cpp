#include "modarc/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "modarc/error.hpp"

namespace modarc {

Rect interaction_area(const ObjectRecord& controllable, Vec2i other_half_extent, int margin) {
  const int hx = (controllable.shape.width() - 1) / 2 + other_half_extent.x + margin;
  const int hy = (controllable.shape.height() - 1) / 2 + other_half_extent.y + margin;
  return controllable.observed_area.inflated(hx, hy);
}

std::optional<GoalCommand> compute_goal(const TrajectoryForecast& forecast,
                                        const ObjectRecord& controllable, Vec2d offset,
                                        const Rect& area, long forecast_id) {
  const Rect& reach = controllable.observed_area;
  if (reach.is_empty()) return std::nullopt;
  auto gap = [&](Vec2d p) { return distance(p, reach.clamp(p)); };
  for (std::size_t i = 0; i < forecast.positions.size(); ++i) {
    const Vec2d p = forecast.positions[i];
    if (!area.contains(p)) continue;
    // Moving away (e.g. just after a rebound) is not an interception.
    if (i < forecast.velocities.size() && gap(p - forecast.velocities[i]) < gap(p)) continue;
    GoalCommand cmd;
    cmd.intersection = reach.clamp(p);
    cmd.goal = reach.clamp(cmd.intersection - offset);
    cmd.offset = cmd.intersection - cmd.goal;
    cmd.intercept = static_cast<long>(i) + 1;
    cmd.forecast_id = forecast_id;
    return cmd;
  }
  return std::nullopt;
}

std::optional<GoalCommand> compute_goal(const TrajectoryForecast& forecast,
                                        const ObjectRecord& controllable, Vec2d offset) {
  return compute_goal(forecast, controllable, offset, controllable.observed_area);
}

void ObjectRegistry::reset() { *this = ObjectRegistry{}; }

void ObjectRegistry::update(const EnvState& state) {
  controllable_ = state.controllable();
  if (const auto* b = state.ball()) {
    ball_ = *b;
    ball_absent_ = false;
  } else {
    ball_.reset();
    ball_absent_ = true;
  }
  world_ = WorldSnapshot::from_state(state, object_id::ball);
}

void ObjectRegistry::update(const Frame& frame, const Frame* prev,
                            const std::vector<ShapeTemplate>& templates,
                            std::size_t history_capacity, int coast_ticks) {
  const MatchResult found = match_objects(frame, prev, templates);
  for (const auto& t : templates) {
    if (t.kind == ObjectKind::static_object) continue;
    const bool is_ball = t.id == object_id::ball;
    if (!is_ball && t.kind != ObjectKind::controllable) continue;
    auto& slot = is_ball ? ball_ : controllable_;
    const Detection* d = found.find(t.id);
    if (!slot) {
      if (!d) continue;
      ObjectRecord rec;
      rec.id = t.id;
      rec.object_class = t.object_class;
      rec.kind = t.kind;
      rec.shape = t.variants[std::size_t(d->variant)];
      rec.observed_area = Rect::empty();
      slot = rec;
    }
    if (d) {
      slot->shape = t.variants[std::size_t(d->variant)];
      slot->anchor = d->anchor;
      if (is_ball) {
        ball_absent_ = false;
        coasting_ = 0;
      }
    } else if (is_ball) {
      // Coast on the last velocity, then give up.
      if (ball_absent_ || ++coasting_ > coast_ticks) {
        ball_absent_ = true;
        slot->position_history.clear();
        slot->velocity_history.clear();
        continue;
      }
      if (!slot->velocity_history.empty()) slot->anchor = slot->anchor + slot->velocity_history.back();
    }
    slot->observe(history_capacity);
  }
  world_ = snapshot_from_frame(frame, palette::ball);
}

namespace {

Vec2i half_extent(const ShapeBitmap& s) { return {(s.width() - 1) / 2, (s.height() - 1) / 2}; }

std::vector<std::string> action_labels(EnvName env, const EnvLayout& layout) {
  return reset(env, 0, layout).action_set();
}

int controllable_half_width(EnvName env, const EnvLayout& layout) {
  return (reset(env, 0, layout).controllable().shape.width() - 1) / 2;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

}  // namespace

Agent::Agent(EnvName env, AgentConfig config, std::uint64_t seed)
    : Agent(env, default_layout(env), std::move(config), seed) {}

Agent::Agent(EnvName env, const EnvLayout& layout, AgentConfig config, std::uint64_t seed)
    : env_(env),
      layout_(layout),
      config_((config.validate(), std::move(config))),
      rng_(seed),
      predictor_(config_.predictor, (layout.ball_size - 1) / 2 + config_.predictor.probe_reach,
                 mix(seed, 1)),
      ball_track_(config_.predictor.history, config_.predictor.sensor_width),
      controller_(config_.controller, action_labels(env, layout),
                  Rect{0, 0, layout.width - 1, layout.height - 1}, mix(seed, 2)),
      replay_(config_.controller.capacity),
      contacts_(controllable_half_width(env, layout), config_.contact) {
  if (config_.use_pixels) templates_ = templates_for(env, layout);
  begin_episode();
}

double Agent::temperature() const {
  const auto& c = config_.contact;
  if (!training_) return c.tau_floor;
  return std::max(c.tau_floor, c.tau * std::pow(c.tau_decay, double(episodes_)));
}

std::uint64_t Agent::hash() const {
  std::uint64_t h = mix(predictor_.net().hash(), controller_.net().hash());
  for (int b = contacts_.min_bucket(); b <= contacts_.max_bucket(); ++b) {
    const auto& s = contacts_.stat(b);
    h = mix(h, static_cast<std::uint64_t>(s.count));
    h = mix(h, std::hash<double>{}(s.mean));
  }
  return h;
}

void Agent::begin_episode() {
  registry_.reset();
  prev_frame_.reset();
  ball_track_.clear();
  forecast_.reset();
  goal_.reset();
  goal_from_forecast_ = false;
  pending_offset_.reset();
  fallback_goal_.reset();
  goal_age_ = 0;
  action_history_.assign(std::size_t(config_.controller.history), 0);
  last_obs_.reset();
  prev_position_.reset();
  goal_episode_.clear();
  episode_ticks_ = 0;
}

std::string Agent::tick(const EnvState& state, const StepEvents& events) {
  registry_.update(state);
  return decide(state.tick, events);
}

std::string Agent::tick(const Frame& frame, const StepEvents& events) {
  if (templates_.empty()) templates_ = templates_for(env_, layout_);
  registry_.update(frame, prev_frame_ ? &*prev_frame_ : nullptr, templates_,
                   std::size_t(layout_.history_capacity), config_.coast_ticks);
  prev_frame_ = frame;
  return decide(episode_ticks_ * config_.frame_skip, events);
}

void Agent::end_episode(const StepEvents& events, long final_tick) {
  handle_events(final_tick, events);
  close_goal_episode();
  if (training_) contacts_.flush();
  ++episodes_;
}

void Agent::handle_events(long env_tick, const StepEvents& events) {
  bool hit = false;
  for (const auto& c : events.contacts) {
    if (c.other_id != object_id::ball) continue;
    if (training_) contacts_.record_contact(c);
    if (c.miss) ++totals_.misses;
    else hit = true;
  }
  const bool interaction = hit || std::any_of(events.contacts.begin(), events.contacts.end(),
                                              [](const ContactEvent& c) { return c.miss; });
  if (hit) ++totals_.hits;
  if (interaction) {
    if (goal_ && goal_from_forecast_) {
      ++totals_.rallies_scored;
      const auto* ctrl = registry_.controllable();
      if (ctrl && distance(Vec2d(ctrl->center()), goal_->goal) <= config_.controller.goal_radius) {
        ++totals_.rallies_on_goal;
      }
    }
    pending_offset_.reset();
    forecast_.reset();
  }
  if (training_) contacts_.settle_rewards(events.rewards, env_tick);
}

void Agent::track_ball() {
  const auto* ball = registry_.ball();
  if (!ball || ball->position_history.empty()) {
    ball_track_.clear();
    return;
  }
  const Vec2d pos(ball->center());
  const Vec2d vel = ball->velocity_history.empty() ? Vec2d{} : Vec2d(ball->velocity_history.back());
  auto sensor = sense(pos, registry_.world(), config_.predictor.sensor_width,
                      predictor_.probe_radius());
  auto sample = ball_track_.push(pos, vel, std::move(sensor), config_.predictor.max_speed);
  if (!training_) return;
  if (sample) predictor_.add_sample(std::move(sample->first), sample->second);
  if (predictor_.buffered() < config_.predictor.warmup) return;
  for (int u = 0; u < config_.predictor.updates_per_step; ++u) {
    if (auto loss = predictor_.train_step(rng_)) {
      totals_.predictor_loss += *loss;
      ++totals_.predictor_updates;
    }
  }
}

Vec2d Agent::snap(Vec2d goal, std::optional<Vec2d> contact) const {
  if (seen_positions_.empty() || seen_positions_.size() > config_.snap_limit) return goal;
  Vec2d best = goal;
  double best_gap = 1e300, best_d = 1e300;
  for (const auto& [xy, cells] : seen_positions_) {
    const Vec2d p(xy.first, xy.second);
    double gap = 0.0;
    if (contact) {
      gap = 1e300;
      for (Vec2i c : cells) gap = std::min(gap, distance(Vec2d(c), *contact));
      gap = std::floor(gap);
    }
    const double d = distance(p, goal);
    if (gap < best_gap || (gap == best_gap && d < best_d)) {
      best_gap = gap;
      best_d = d;
      best = p;
    }
  }
  return best;
}

void Agent::replan(long) {
  const auto* ball = registry_.ball();
  const auto* ctrl = registry_.controllable();
  if (!ball || !ctrl || ball_track_.size() < 2) {
    forecast_.reset();
    goal_from_forecast_ = false;
    return;
  }
  bool need = !forecast_ || episode_ticks_ - forecast_tick_ >= config_.replan_every;
  if (!need) {
    const auto idx = std::size_t(episode_ticks_ - forecast_tick_ - 1);
    need = idx >= forecast_->size() ||
           distance(forecast_->positions[idx], Vec2d(ball->center())) > config_.replan_threshold;
  }
  if (!need) return;
  forecast_ = predictor_.predict(ball_track_.rollout_seed(), registry_.world());
  forecast_tick_ = episode_ticks_;
  ++forecast_count_;
  if (!pending_offset_) {
    Vec2d aim(contacts_.sample_contact_point(temperature(), rng_));
    const double reach_x = std::max(0, ctrl->shape.width() / 2 - config_.aim_margin);
    aim.x = std::clamp(aim.x, -reach_x, reach_x);
    pending_offset_ = aim;
  }
  ObjectRecord reach = *ctrl;
  reach.observed_area = accessible_;
  const Rect area = interaction_area(reach, half_extent(ball->shape), config_.contact_margin);
  auto cmd = compute_goal(*forecast_, reach, *pending_offset_, area, forecast_count_);
  if (!cmd) {
    goal_from_forecast_ = false;
    return;
  }
  const Vec2d snapped = snap(cmd->goal, cmd->intersection);
  cmd->goal = snapped;
  cmd->offset = cmd->intersection - snapped;
  goal_ = cmd;
  goal_from_forecast_ = true;
  fallback_goal_.reset();
}

void Agent::choose_fallback_goal() {
  const Rect& area = accessible_;
  if (!fallback_goal_) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (training_ && config_.practice_probability > 0 && coin(rng_) < config_.practice_probability) {
      std::uniform_int_distribution<int> px(area.x0, area.x1);
      std::uniform_int_distribution<int> py(area.y0, area.y1);
      const int x = px(rng_);
      fallback_goal_ = snap(Vec2d(x, py(rng_)));
    } else {
      fallback_goal_ = snap(area.clamp(Vec2d(layout_.width / 2, (area.y0 + area.y1) / 2.0)));
    }
  }
  GoalCommand cmd;
  cmd.goal = *fallback_goal_;
  cmd.intersection = cmd.goal;
  goal_ = cmd;
}

void Agent::close_goal_episode() {
  if (goal_episode_.empty()) return;
  goal_episode_.back().done = true;
  ++totals_.goal_episodes;
  if (goal_episode_.back().reward >= 1.0) ++totals_.goals_reached;
  if (training_ && config_.policy == Policy::learned) {
    if (config_.controller.use_her) {
      replay_.push_episode(controller_.relabel_episode(goal_episode_, rng_));
    } else {
      replay_.push_episode(goal_episode_);
    }
  }
  goal_episode_.clear();
  goal_age_ = 0;
}

void Agent::record_transition(Vec2d now) {
  if (!last_obs_) return;
  GoalTransition t;
  t.observation = *last_obs_;
  t.action = last_action_;
  t.next = {now, last_obs_->goal, std::vector<int>(action_history_.begin(), action_history_.end())};
  t.reward = controller_.reward_for(now, last_obs_->goal);
  goal_episode_.push_back(std::move(t));
  last_obs_.reset();
  ++goal_age_;
  if (goal_episode_.back().reward >= 1.0 || goal_age_ >= config_.goal_timeout) {
    close_goal_episode();
    if (!goal_from_forecast_) fallback_goal_.reset();
  }
}

std::string Agent::baseline_action() {
  const auto& labels = controller_.actions();
  if (config_.policy == Policy::random) {
    std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 1);
    return labels[pick(rng_)];
  }
  const auto* ball = registry_.ball();
  const auto* ctrl = registry_.controllable();
  if (!ball || !ctrl) return "noop";
  const int bx = ball->center().x;
  if (env_ == EnvName::pinball_lite) return bx < layout_.width / 2 ? "left" : "right";
  const int dx = bx - ctrl->center().x;
  if (dx < -1) return "left";
  if (dx > 1) return "right";
  return "noop";
}

std::string Agent::decide(long env_tick, const StepEvents& events) {
  ++episode_ticks_;
  ++lifetime_ticks_;
  ++totals_.ticks;
  handle_events(env_tick, events);

  std::string label;
  const auto* ctrl = registry_.controllable();
  if (config_.policy != Policy::learned || !ctrl) {
    label = ctrl ? baseline_action() : "noop";
    log_tick(env_tick, label);
    return label;
  }

  track_ball();
  if (!ctrl->observed_area.is_empty()) {
    accessible_.expand_to({ctrl->observed_area.x0, ctrl->observed_area.y0});
    accessible_.expand_to({ctrl->observed_area.x1, ctrl->observed_area.y1});
  }
  const Vec2d now(ctrl->center());
  if (seen_positions_.size() <= config_.snap_limit) {
    const std::pair<int, int> key(int(now.x), int(now.y));
    if (!seen_positions_.count(key)) {
      std::vector<Vec2i> cells;
      for (int y = 0; y < ctrl->shape.height(); ++y)
        for (int x = 0; x < ctrl->shape.width(); ++x)
          if (ctrl->shape.at(x, y)) cells.push_back(ctrl->anchor + Vec2i{x, y});
      seen_positions_.emplace(key, std::move(cells));
    }
  }
  if (prev_position_ && *prev_position_ == now) {
    stay_action_[{int(now.x), int(now.y)}] = last_action_;
  }
  prev_position_ = now;
  record_transition(now);

  const std::optional<Vec2d> before = goal_ ? std::optional<Vec2d>(goal_->goal) : std::nullopt;
  replan(env_tick);
  if (!goal_from_forecast_) choose_fallback_goal();
  if (before && !(goal_->goal == *before)) close_goal_episode();

  const auto& cc = config_.controller;
  int action = 0;
  const bool warming = training_ && lifetime_ticks_ <= config_.warmup_steps;
  GoalObservation obs{now, goal_->goal, std::vector<int>(action_history_.begin(), action_history_.end())};
  if (warming) {
    std::uniform_int_distribution<int> pick(0, controller_.action_count() - 1);
    action = pick(rng_);
    last_obs_ = obs;
  } else if (distance(now, goal_->goal) <= cc.goal_radius) {
    const auto stay = stay_action_.find({int(now.x), int(now.y)});
    action = stay == stay_action_.end() ? 0 : stay->second;  // hold
  } else {
    const double eps = training_ ? controller_.epsilon_at(controller_ticks_++) : 0.0;
    action = controller_.act(obs, eps, rng_);
    last_obs_ = obs;
  }
  last_action_ = action;
  action_history_.pop_front();
  action_history_.push_back(action);

  if (training_) {
    if (auto loss = controller_.learn_step(replay_, rng_)) {
      totals_.controller_loss += *loss;
      ++totals_.controller_updates;
    }
  }
  label = controller_.actions()[std::size_t(action)];
  log_tick(env_tick, label);
  return label;
}

void Agent::log_tick(long env_tick, const std::string& action) {
  if (!debug_) return;
  nlohmann::json j;
  j["tick"] = env_tick;
  j["action"] = action;
  auto point = [](Vec2d p) { return nlohmann::json::array({p.x, p.y}); };
  if (const auto* b = registry_.ball()) j["ball"] = point(Vec2d(b->center()));
  else j["ball"] = nullptr;
  if (const auto* c = registry_.controllable()) j["controllable"] = point(Vec2d(c->center()));
  if (goal_) {
    j["goal"] = point(goal_->goal);
    j["goal_source"] = goal_from_forecast_ ? "forecast" : "fallback";
  } else {
    j["goal"] = nullptr;
  }
  j["predictor_loss"] = totals_.predictor_updates
                            ? totals_.predictor_loss / double(totals_.predictor_updates)
                            : 0.0;
  j["controller_loss"] = totals_.controller_updates
                             ? totals_.controller_loss / double(totals_.controller_updates)
                             : 0.0;
  *debug_ << j.dump() << '\n';
}

void Agent::save(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  save_checkpoint(dir / "predictor.ckpt", predictor_.net());
  controller_.save(dir / "controller.ckpt");
  contacts_.write_csv(dir / "contacts.csv");
}

void Agent::load(const std::filesystem::path& dir) {
  predictor_.net() = load_checkpoint(dir / "predictor.ckpt", predictor_topology(config_.predictor));
  controller_ = GoalController::load(dir / "controller.ckpt", config_.controller,
                                     controller_.playfield());
  contacts_ = ContactRewardTable::read_csv(dir / "contacts.csv", config_.contact);
}

EpisodeSummary run_episode(EnvName env, Agent& agent, long budget, std::uint64_t seed,
                           EventLog* log) {
  if (budget < 1) throw ConfigError("episode budget must be >= 1");
  EnvState state = reset(env, seed, agent.layout());
  agent.begin_episode();
  const AgentTotals before = agent.totals();
  StepEvents events;
  EpisodeSummary out;
  long rallies = 0;
  const bool pixels = agent.config().use_pixels;
  while (out.steps < budget && !state.terminal) {
    const std::string action = pixels ? agent.tick(render(state), events) : agent.tick(state, events);
    StepResult r = step(state, action, agent.config().frame_skip);
    if (log) {
      log->log_rewards(r.rewards);
      log->log_contacts(r.contacts);
    }
    for (const auto& rw : r.rewards) {
      out.score += rw.amount;
      if (env == EnvName::duel && rw.amount > 0) ++rallies;
    }
    for (const auto& c : r.contacts) rallies += c.miss ? 1 : 0;
    events = {std::move(r.rewards), std::move(r.contacts)};
    state = std::move(r.state);
    ++out.steps;
  }
  agent.end_episode(events, state.tick);
  const AgentTotals& after = agent.totals();
  out.terminal = state.terminal;
  out.hits = after.hits - before.hits;
  out.misses = after.misses - before.misses;
  const long attempts = out.hits + out.misses;
  out.interception_rate = attempts ? double(out.hits) / double(attempts) : 0.0;
  out.rallies = rallies;
  out.mean_rally_length = double(out.hits) / double(std::max(1L, rallies));
  const long pu = after.predictor_updates - before.predictor_updates;
  const long cu = after.controller_updates - before.controller_updates;
  out.predictor_loss = pu ? (after.predictor_loss - before.predictor_loss) / double(pu) : 0.0;
  out.controller_loss = cu ? (after.controller_loss - before.controller_loss) / double(cu) : 0.0;
  const long ge = after.goal_episodes - before.goal_episodes;
  out.goal_success = ge ? double(after.goals_reached - before.goals_reached) / double(ge) : 0.0;
  return out;
}

DrillResult goal_reaching_drill(EnvName env, const AgentConfig& config, long train_steps,
                                int probes, std::uint64_t seed) {
  if (train_steps < 1 || probes < 1) throw ConfigError("drill needs steps and probes >= 1");
  config.validate();
  const EnvLayout layout = default_layout(env);
  std::mt19937_64 rng(mix(seed, 3));
  GoalController ctrl(config.controller, action_labels(env, layout),
                      Rect{0, 0, layout.width - 1, layout.height - 1}, mix(seed, 4));
  ReplayStore store(config.controller.capacity);
  std::uint64_t episode_seed = mix(seed, 5);
  EnvState state = reset(env, episode_seed);
  const auto& cc = config.controller;

  auto advance = [&](int action) {
    StepResult r = step(state, ctrl.actions()[std::size_t(action)], config.frame_skip);
    state = std::move(r.state);
    if (state.terminal) state = reset(env, ++episode_seed);
  };
  // Map the accessible area with random actions first.
  std::uniform_int_distribution<int> pick(0, ctrl.action_count() - 1);
  long steps = 0;
  Rect area = Rect::empty();
  for (; steps < std::min<long>(config.warmup_steps, train_steps); ++steps) {
    area.expand_to(state.controllable().center());
    advance(pick(rng));
  }
  area.expand_to(state.controllable().center());
  auto random_goal = [&] {
    std::uniform_int_distribution<int> px(area.x0, area.x1);
    std::uniform_int_distribution<int> py(area.y0, area.y1);
    const int x = px(rng);
    return Vec2d(x, py(rng));
  };

  long ctrl_steps = 0;
  while (steps < train_steps) {
    const Vec2d goal = random_goal();
    GoalObservation obs = ctrl.initial_observation(Vec2d(state.controllable().center()), goal);
    std::vector<GoalTransition> episode;
    for (int t = 0; t < config.goal_timeout && steps < train_steps; ++t, ++steps) {
      const int a = ctrl.act(obs, ctrl.epsilon_at(ctrl_steps++), rng);
      advance(a);
      area.expand_to(state.controllable().center());
      GoalObservation next = obs;
      next.current = Vec2d(state.controllable().center());
      next.action_history.erase(next.action_history.begin());
      next.action_history.push_back(a);
      const double r = ctrl.reward_for(next.current, goal);
      episode.push_back({obs, a, r, next, false});
      ctrl.learn_step(store, rng);
      obs = std::move(next);
      if (r >= 1.0) break;
    }
    if (episode.empty()) continue;
    episode.back().done = true;
    if (cc.use_her) store.push_episode(ctrl.relabel_episode(episode, rng));
    else store.push_episode(episode);
  }

  int reached = 0;
  for (int p = 0; p < probes; ++p) {
    const Vec2d goal = random_goal();
    GoalObservation obs = ctrl.initial_observation(Vec2d(state.controllable().center()), goal);
    bool ok = ctrl.reward_for(obs.current, goal) >= 1.0;
    for (int t = 0; t < config.goal_timeout && !ok; ++t) {
      const int a = ctrl.greedy(obs);
      advance(a);
      obs.current = Vec2d(state.controllable().center());
      obs.action_history.erase(obs.action_history.begin());
      obs.action_history.push_back(a);
      ok = ctrl.reward_for(obs.current, goal) >= 1.0;
    }
    reached += ok;
  }
  return {double(reached) / double(probes), steps, std::move(ctrl)};
}

}  // namespace modarc
