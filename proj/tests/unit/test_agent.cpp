#include <gtest/gtest.h>

#include <sstream>

#include "modarc/agent.hpp"
#include "modarc/env_io.hpp"
#include "modarc/error.hpp"
#include "modarc/pixel.hpp"
#include "test_util.hpp"

namespace modarc {
namespace {

ObjectRecord paddle_with_area(Rect area) {
  ObjectRecord r;
  r.id = object_id::controllable;
  r.object_class = "paddle";
  r.kind = ObjectKind::controllable;
  r.shape = ShapeBitmap::filled(15, 3);
  r.anchor = {73, 180};
  r.observed_area = area;
  r.action_set = {"noop", "left", "right"};
  return r;
}

TrajectoryForecast forecast_from(std::vector<Vec2d> positions) {
  TrajectoryForecast f;
  f.start = {80, 60};
  Vec2d prev = f.start;
  for (auto p : positions) {
    f.positions.push_back(p);
    f.velocities.push_back(p - prev);
    f.clamped.push_back(false);
    prev = p;
  }
  return f;
}

// Ball falling 10 px per step along x = 80, reaching y = 190 at step 12.
TrajectoryForecast falling_forecast() {
  std::vector<Vec2d> pos;
  for (int i = 0; i < 12; ++i) pos.push_back({80, 190.0 - 10.0 * (11 - i)});
  return forecast_from(pos);
}

const Rect kPaddleArea{11, 181, 148, 190};

TEST(ComputeGoal, WorkedExample) {
  const auto g = compute_goal(falling_forecast(), paddle_with_area(kPaddleArea), {7, 0});
  ASSERT_TRUE(g.has_value());
  EXPECT_EQ(g->goal, (Vec2d{73, 190}));
  EXPECT_EQ(g->intercept, 12);
  EXPECT_EQ(g->intersection, (Vec2d{80, 190}));
}

TEST(ComputeGoal, NoIntersection) {
  std::vector<Vec2d> pos;
  for (int i = 0; i < 20; ++i) pos.push_back({80, 100.0 - 3 * i});
  EXPECT_FALSE(compute_goal(forecast_from(pos), paddle_with_area(kPaddleArea), {0, 0}));
}

TEST(ComputeGoal, EarliestOfTwoCrossings) {
  std::vector<Vec2d> pos;
  for (double x : {20.0, 40.0, 60.0}) pos.push_back({x, 150});
  pos.push_back({70, 185});   // first entry, step 4
  pos.push_back({80, 170});
  pos.push_back({90, 186});   // second entry, step 6
  const auto g = compute_goal(forecast_from(pos), paddle_with_area(kPaddleArea), {0, 0});
  ASSERT_TRUE(g);
  EXPECT_EQ(g->intercept, 4);
  EXPECT_EQ(g->intersection, (Vec2d{70, 185}));
}

TEST(ComputeGoal, AdmissibleAndOffsetExact) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> x(0, 159), vx(-6, 6), off(-9, 9);
  const auto paddle = paddle_with_area(kPaddleArea);
  const Rect area = interaction_area(paddle, {2, 2}, 4);
  int produced = 0;
  for (int t = 0; t < 2000; ++t) {
    std::vector<Vec2d> pos;
    Vec2d p{x(rng), 20};
    const double dx = vx(rng);
    for (int i = 0; i < 40; ++i) {
      p = {std::clamp(p.x + dx, 0.0, 159.0), p.y + 5};
      pos.push_back(p);
    }
    const auto g = compute_goal(forecast_from(pos), paddle, {off(rng), 0}, area);
    if (!g) continue;
    ++produced;
    EXPECT_TRUE(paddle.observed_area.contains(g->goal));
    EXPECT_EQ(g->goal.x + g->offset.x, g->intersection.x);
    EXPECT_EQ(g->goal.y + g->offset.y, g->intersection.y);
  }
  EXPECT_GT(produced, 1000);
}

TEST(AgentConfigTest, LoadOverridesAndRejectsUnknown) {
  auto cfg = load_agent_config(KvConfig::parse(
      "predictor.rollout = 12\ncontroller.gamma = 0.9\ncontact.tau = 0.4\nagent.replan_every = 3\n"));
  EXPECT_EQ(cfg.predictor.rollout, 12);
  EXPECT_EQ(cfg.controller.gamma, 0.9);
  EXPECT_EQ(cfg.contact.tau, 0.4);
  EXPECT_EQ(cfg.replan_every, 3);
  EXPECT_THROW(load_agent_config(KvConfig::parse("agent.colour = 3\n")), ConfigError);
  EXPECT_THROW(load_agent_config(KvConfig::parse("predictor.history = 0\n")), ConfigError);
  bool seen = false;
  for (const auto& [k, v] : describe(cfg)) seen = seen || (k == "agent.replan_every" && v == "3");
  EXPECT_TRUE(seen);
}

TEST(AgentRun, ZeroBudgetRejected) {
  Agent agent(EnvName::duel, AgentConfig{}, 1);
  EXPECT_THROW(run_episode(EnvName::duel, agent, 0, 1), ConfigError);
}

TEST(AgentRun, ColdStartIsIdleWithoutForecast) {
  AgentConfig cfg;
  cfg.warmup_steps = 0;
  Agent agent(EnvName::duel, cfg, 1);
  agent.set_training(false);
  agent.begin_episode();
  const EnvState s = reset(EnvName::duel, 1);
  EXPECT_EQ(agent.tick(s, {}), "noop");
  EXPECT_FALSE(agent.forecast().has_value());
}

TEST(AgentRun, BallLeavingHoldsCentre) {
  AgentConfig cfg;
  cfg.warmup_steps = 0;
  Agent agent(EnvName::duel, cfg, 2);
  agent.set_training(false);
  agent.begin_episode();
  EnvState s = reset(EnvName::duel, 2);
  s.ball_velocity_q8 = {0, -512};
  std::string action;
  for (int i = 0; i < 8; ++i) {
    action = agent.tick(s, {});
    s = step(s, action).state;
  }
  ASSERT_TRUE(agent.active_goal().has_value());
  EXPECT_EQ(agent.active_goal()->forecast_id, 0);
  // Goals snap to visited positions while few exist.
  EXPECT_NEAR(agent.active_goal()->goal.x, s.layout.width / 2, agent.config().controller.goal_radius);
}

TEST(AgentRun, SameSeedsSameSummary) {
  AgentConfig cfg;
  cfg.warmup_steps = 50;
  Agent a(EnvName::bricks, cfg, 9), b(EnvName::bricks, cfg, 9);
  const auto ra = run_episode(EnvName::bricks, a, 400, 4);
  const auto rb = run_episode(EnvName::bricks, b, 400, 4);
  EXPECT_EQ(ra, rb);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_GT(ra.steps, 100);
}

TEST(AgentRun, EventLogBitwiseReproducible) {
  const auto dir = testing::scratch_dir();
  for (const char* name : {"a.csv", "b.csv"}) {
    AgentConfig cfg;
    cfg.warmup_steps = 30;
    Agent agent(EnvName::duel, cfg, 5);
    EventLog log(dir / name);
    run_episode(EnvName::duel, agent, 600, 5, &log);
  }
  const auto a = testing::slurp(dir / "a.csv");
  EXPECT_EQ(a, testing::slurp(dir / "b.csv"));
  EXPECT_NE(a.find("contact"), std::string::npos);
}

TEST(AgentRun, BaselinesRun) {
  for (auto policy : {Policy::random, Policy::tracker}) {
    AgentConfig cfg;
    cfg.policy = policy;
    Agent agent(EnvName::pinball_lite, cfg, 3);
    const auto r = run_episode(EnvName::pinball_lite, agent, 300, 3);
    EXPECT_GT(r.steps, 0);
    EXPECT_EQ(agent.totals().controller_updates, 0);
  }
}

TEST(AgentRun, PixelModeTracksBall) {
  AgentConfig cfg;
  cfg.use_pixels = true;
  cfg.warmup_steps = 20;
  Agent agent(EnvName::duel, cfg, 4);
  const auto r = run_episode(EnvName::duel, agent, 300, 4);
  EXPECT_EQ(r.steps, 300);
  ASSERT_NE(agent.registry().controllable(), nullptr);
  EXPECT_GT(agent.predictor().buffered(), 100u);
}

TEST(AgentRun, DebugLogIsJsonLines) {
  Agent agent(EnvName::duel, AgentConfig{}, 4);
  std::ostringstream out;
  agent.set_debug_log(&out);
  run_episode(EnvName::duel, agent, 20, 4);
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    EXPECT_EQ(line.front(), '{');
    EXPECT_EQ(line.back(), '}');
    EXPECT_NE(line.find("\"tick\""), std::string::npos);
  }
  EXPECT_EQ(lines, 20);
}

TEST(AgentState, SaveLoadRoundTrip) {
  const auto dir = testing::scratch_dir();
  AgentConfig cfg;
  cfg.warmup_steps = 100;
  Agent agent(EnvName::duel, cfg, 6);
  run_episode(EnvName::duel, agent, 700, 6);
  agent.save(dir / "agent");
  Agent other(EnvName::duel, cfg, 99);
  other.load(dir / "agent");
  EXPECT_EQ(other.predictor().net().hash(), agent.predictor().net().hash());
  EXPECT_EQ(other.controller().net().hash(), agent.controller().net().hash());
  for (int b = agent.contacts().min_bucket(); b <= agent.contacts().max_bucket(); ++b) {
    EXPECT_EQ(other.contacts().stat(b).count, agent.contacts().stat(b).count);
  }
}

TEST(Registry, CoastsThenDeclaresAbsent) {
  const auto templates = templates_for(EnvName::duel);
  EnvState s = reset(EnvName::duel, 1);
  ObjectRegistry reg;
  Frame prev = render(s);
  reg.update(prev, nullptr, templates, 16, 5);
  s = step(s, "noop").state;
  Frame cur = render(s);
  reg.update(cur, &prev, templates, 16, 5);
  ASSERT_NE(reg.ball(), nullptr);
  const Vec2i last = reg.ball()->center();
  const Vec2i vel = reg.ball()->velocity_history.back();
  // Hide the ball by painting it over with background.
  Frame blank = cur;
  for (auto& c : blank.cells) c = c == palette::ball ? palette::background : c;
  for (int i = 1; i <= 5; ++i) {
    reg.update(blank, &cur, templates, 16, 5);
    ASSERT_NE(reg.ball(), nullptr) << i;
    EXPECT_EQ(reg.ball()->center(), (last + Vec2i{vel.x * i, vel.y * i}));
    EXPECT_EQ(reg.coasting(), i);
  }
  reg.update(blank, &cur, templates, 16, 5);
  EXPECT_EQ(reg.ball(), nullptr);
  EXPECT_TRUE(reg.ball_absent());
}

}  // namespace
}  // namespace modarc
