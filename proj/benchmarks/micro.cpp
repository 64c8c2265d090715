#include <benchmark/benchmark.h>

#include <random>

#include "modarc/agent.hpp"
#include "modarc/neural.hpp"
#include "modarc/pixel.hpp"
#include "modarc/trajectory.hpp"

namespace {

using namespace modarc;

void BM_EnvStep(benchmark::State& state) {
  const auto env = static_cast<EnvName>(state.range(0));
  EnvState s = reset(env, 1);
  const auto actions = s.action_set();
  std::size_t i = 0;
  for (auto _ : state) {
    s = step(s, actions[i++ % actions.size()]).state;
    if (s.terminal) s = reset(env, i);
  }
  state.SetLabel(std::string(to_string(env)));
}
BENCHMARK(BM_EnvStep)->DenseRange(0, 2);

void BM_RenderAndMatch(benchmark::State& state) {
  const auto env = static_cast<EnvName>(state.range(0));
  const EnvState s = reset(env, 1);
  const Frame prev = render(s);
  const EnvState next = step(s, s.action_set().front()).state;
  const auto templates = templates_for(env);
  for (auto _ : state) {
    const Frame f = render(next);
    benchmark::DoNotOptimize(match_objects(f, &prev, templates));
  }
  state.SetLabel(std::string(to_string(env)));
}
BENCHMARK(BM_RenderAndMatch)->DenseRange(0, 2);

void BM_ForwardBackward(benchmark::State& state) {
  const int width = int(state.range(0));
  const Topology t{64, {width, width}, {{"position", 0, 2}, {"velocity", 0, 2}}};
  const DenseNet net(t, 1);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  TrainBatch batch;
  batch.inputs = Eigen::MatrixXd::NullaryExpr(32, t.inputs, [&] { return n(rng); });
  for (int h = 0; h < 2; ++h) {
    batch.targets.push_back(Eigen::MatrixXd::NullaryExpr(32, 2, [&] { return n(rng); }));
  }
  for (auto _ : state) benchmark::DoNotOptimize(backward(net, batch).loss);
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(64)->Arg(128);

void BM_Rollout(benchmark::State& state) {
  PredictorConfig cfg;
  cfg.rollout = int(state.range(0));
  const EnvState s = reset(EnvName::duel, 3);
  const TrajectoryPredictor pred(cfg, 4, 1);
  TrackedHistory h(cfg.history, cfg.sensor_width);
  const auto world = WorldSnapshot::from_state(s, object_id::ball);
  for (int k = 0; k <= cfg.history; ++k) {
    const Vec2d pos{80.0 + 2 * k, 90.0 + 4 * k};
    h.push(pos, {2, 4}, sense(pos, world, cfg.sensor_width, 4), cfg.max_speed);
  }
  for (auto _ : state) benchmark::DoNotOptimize(pred.predict(h.rollout_seed(), world));
}
BENCHMARK(BM_Rollout)->Arg(20)->Arg(40);

void BM_AgentTick(benchmark::State& state) {
  AgentConfig cfg;
  cfg.warmup_steps = 0;
  Agent agent(EnvName::duel, cfg, 1);
  agent.begin_episode();
  EnvState s = reset(EnvName::duel, 1);
  StepEvents events;
  for (auto _ : state) {
    auto r = step(s, agent.tick(s, events));
    events = {std::move(r.rewards), std::move(r.contacts)};
    s = std::move(r.state);
    if (s.terminal) {
      agent.end_episode(events, s.tick);
      s = reset(EnvName::duel, s.tick);
      agent.begin_episode();
      events = {};
    }
  }
}
BENCHMARK(BM_AgentTick);

}  // namespace

BENCHMARK_MAIN();
