#pragma once

#include <cstdint>
#include <random>

#include "modarc/arcade_env.hpp"
#include "modarc/trajectory.hpp"
#include "oracles.hpp"

namespace modarc::oracle {

inline int duel_probe_radius(const PredictorConfig& config) {
  return (default_layout(EnvName::duel).ball_size - 1) / 2 + config.probe_reach;
}

// Trains a predictor on the ball of random-policy duel play until `samples`
// supervised pairs have been collected, using the configured update cadence.
inline TrajectoryPredictor train_on_duel(std::uint64_t seed, long samples,
                                         const PredictorConfig& config = {}) {
  const int radius = duel_probe_radius(config);
  TrajectoryPredictor pred(config, radius, seed);
  std::mt19937_64 rng(seed);
  TrackedHistory hist(config.history, config.sensor_width);
  std::uint64_t episode_seed = seed;
  EnvState st = reset(EnvName::duel, episode_seed);
  const auto actions = st.action_set();
  std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
  long collected = 0;
  while (collected < samples) {
    st = step(st, actions[pick(rng)]).state;
    if (st.terminal) {
      st = reset(EnvName::duel, ++episode_seed * 7);
      hist.clear();
      continue;
    }
    const auto* ball = st.ball();
    const auto world = WorldSnapshot::from_state(st, object_id::ball);
    const Vec2d pos(ball->center());
    const Vec2d vel = ball->velocity_history.empty() ? Vec2d{} : Vec2d(ball->velocity_history.back());
    auto pair = hist.push(pos, vel, sense(pos, world, config.sensor_width, radius),
                          config.max_speed);
    if (pair) {
      pred.add_sample(std::move(pair->first), pair->second);
      ++collected;
    }
    if (pred.buffered() >= config.warmup) {
      for (int u = 0; u < config.updates_per_step; ++u) pred.train_step(rng);
    }
  }
  return pred;
}

struct RolloutProbe {
  Vec2i start;
  int vx_per_tick = 0;
};

// Random ball launches in the duel mid-field. Obstacle-free probes never
// reach a wall within history + 20 steps; bounce probes hit a side wall
// between rollout steps 8 and 14.
inline RolloutProbe draw_probe(bool bounce, std::mt19937_64& rng, int history) {
  const auto L = default_layout(EnvName::duel);
  const int lo = L.wall_thickness + L.ball_size / 2;
  const int hi = L.width - L.wall_thickness - L.ball_size / 2 - 1;
  int vx = std::uniform_int_distribution<int>(0, 3)(rng);
  vx = vx < 2 ? vx - 2 : vx - 1;
  const int y0 = std::uniform_int_distribution<int>(30, 60)(rng);
  const int per_step = std::abs(vx) * 2;
  int x0;
  if (!bounce) {
    const int span = per_step * (history + 20);
    x0 = vx > 0 ? std::uniform_int_distribution<int>(lo + 8, hi - 8 - span)(rng)
                : std::uniform_int_distribution<int>(lo + 8 + span, hi - 8)(rng);
  } else {
    const int hit_step = std::uniform_int_distribution<int>(8, 14)(rng);
    x0 = vx > 0 ? hi - per_step * hit_step : lo + per_step * hit_step;
  }
  return {{x0, y0}, vx};
}

// Mean per-step position error of a 20-step rollout against straight-line
// motion folded at the side walls.
inline double rollout_error(const TrajectoryPredictor& pred, const RolloutProbe& probe,
                            int steps = 20) {
  const auto& cfg = pred.config();
  EnvState s = reset(EnvName::duel, 5);
  const auto L = s.layout;
  auto& ball = s.objects.at(object_id::ball);
  ball.anchor = probe.start - ball.shape.centroid();
  ball.position_history.clear();
  ball.velocity_history.clear();
  ball.observe(L.history_capacity);
  s.ball_velocity_q8 = {probe.vx_per_tick * 256, L.ball_vy * 256};
  s.ball_fraction_q8 = {0, 0};
  s.objects.at(object_id::opponent).anchor.x = probe.start.x < L.width / 2 ? 130 : 15;

  TrackedHistory h(cfg.history, cfg.sensor_width);
  for (int k = 0; k <= cfg.history; ++k) {
    if (k > 0) s = step(s, "noop").state;
    const auto* b = s.ball();
    const auto world = WorldSnapshot::from_state(s, object_id::ball);
    const Vec2d pos(b->center());
    const Vec2d vel = k == 0 ? Vec2d{} : Vec2d(b->velocity_history.back());
    h.push(pos, vel, sense(pos, world, cfg.sensor_width, pred.probe_radius()), cfg.max_speed);
  }
  const auto forecast = pred.predict(h.rollout_seed(), WorldSnapshot::from_state(s, object_id::ball));

  const int lo = L.wall_thickness + L.ball_size / 2;
  const int hi = L.width - L.wall_thickness - L.ball_size / 2 - 1;
  const Vec2d start(s.ball()->center());
  const double vx = (s.ball_velocity_q8.x / 256) * 2.0;
  const double vy = L.ball_vy * 2.0;
  double total = 0;
  for (int i = 0; i < steps; ++i) {
    const Vec2d truth{fold(start.x + vx * (i + 1), lo, hi), start.y + vy * (i + 1)};
    total += distance(forecast.positions[i], truth);
  }
  return total / steps;
}

inline double mean_rollout_error(const TrajectoryPredictor& pred, bool bounce, int trials,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double sum = 0;
  for (int t = 0; t < trials; ++t) {
    sum += rollout_error(pred, draw_probe(bounce, rng, pred.config().history));
  }
  return sum / trials;
}

}  // namespace modarc::oracle
