#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "modarc/error.hpp"
#include "modarc/pixel.hpp"
#include "pixel_harness.hpp"

namespace modarc {
namespace {

TEST(ColorSelect, UniformAndAbsent) {
  const Frame f(10, 6, 3);
  EXPECT_EQ(color_select(f, 3).count(), 60);
  EXPECT_EQ(color_select(f, 4).count(), 0);
}

TEST(ColorSelect, BallCellCount) {
  const EnvState s = reset(EnvName::duel, 7);
  EXPECT_EQ(color_select(render(s), palette::ball).count(), s.ball()->shape.cell_count());
}

TEST(FrameDiff, IdenticalSymmetricAndChecked) {
  const EnvState s = reset(EnvName::bricks, 2);
  const Frame a = render(s);
  const Frame b = render(step(s, "left").state);
  EXPECT_EQ(frame_diff(a, a).count(), 0);
  EXPECT_EQ(frame_diff(a, b), frame_diff(b, a));
  EXPECT_THROW(frame_diff(a, Frame(3, 3)), ShapeError);
}

TEST(FrameDiff, BallShiftIsUnionOfFootprints) {
  EnvState s = reset(EnvName::duel, 7);
  const Frame before = render(s);
  auto& ball = s.objects.at(object_id::ball);
  const Vec2i old_anchor = ball.anchor;
  ball.anchor.x += 2;
  const Frame after = render(s);

  Mask expected(before.width, before.height);
  const ShapeBitmap& shape = ball.shape;
  for (Vec2i a : {old_anchor, ball.anchor}) {
    for (int y = 0; y < shape.height(); ++y)
      for (int x = 0; x < shape.width(); ++x)
        if (shape.at(x, y)) expected.set(a.x + x, a.y + y);
  }
  // Cells covered by both footprints stay ball-coloured.
  for (int y = 0; y < shape.height(); ++y)
    for (int x = 0; x < shape.width(); ++x) {
      const int px = old_anchor.x + x, py = old_anchor.y + y;
      if (shape.at(x, y) && shape.at(x - 2, y)) expected.set(px, py, false);
    }
  EXPECT_EQ(frame_diff(before, after), expected);
}

TEST(Dilate, ChebyshevSquare) {
  Mask m(9, 9);
  m.set(4, 4);
  const Mask d = dilate(m, 2);
  EXPECT_EQ(d.count(), 25);
  EXPECT_TRUE(d.at(2, 6));
  EXPECT_FALSE(d.at(1, 4));
}

TEST(Templates, OnePerObjectClass) {
  for (auto env : {EnvName::duel, EnvName::bricks, EnvName::pinball_lite}) {
    const auto t = templates_for(env);
    std::set<std::string> classes;
    for (const auto& tpl : t) EXPECT_TRUE(classes.insert(tpl.object_class).second) << tpl.object_class;
    std::set<std::string> live;
    for (const auto& [id, obj] : reset(env, 1).objects) live.insert(obj.object_class);
    EXPECT_EQ(classes, live);
  }
}

TEST(Match, DuelPairRecoversTruePositions) {
  EnvState s = reset(EnvName::duel, 7);
  const Frame prev = render(s);
  s = step(s, "right").state;
  const auto m = match_objects(render(s), &prev, templates_for(EnvName::duel));
  for (int id : {object_id::ball, object_id::controllable, object_id::opponent}) {
    const Detection* d = m.find(id);
    ASSERT_NE(d, nullptr) << id;
    EXPECT_EQ(d->anchor, s.objects.at(id).anchor);
    EXPECT_EQ(d->center, s.objects.at(id).center());
  }
  EXPECT_TRUE(m.lost.empty());
}

TEST(Match, OccludedBallReportsTrackingLoss) {
  EnvState s = reset(EnvName::duel, 7);
  const auto& paddle = s.objects.at(object_id::controllable);
  s.objects.at(object_id::ball).anchor = paddle.anchor + Vec2i{5, -1};
  const auto visible = unoccluded_objects(s);
  EXPECT_EQ(std::count(visible.begin(), visible.end(), object_id::ball), 0);
  const auto m = match_objects(render(s), nullptr, templates_for(EnvName::duel));
  EXPECT_TRUE(m.tracking_lost(object_id::ball));
  EXPECT_EQ(m.find(object_id::ball), nullptr);
}

TEST(Match, BrickCountEqualsLiveBricks) {
  EnvState s = reset(EnvName::bricks, 3);
  for (int i = 0; i < 17; ++i) s.objects.erase(object_id::first_brick + 3 * i);
  const auto m = match_objects(render(s), nullptr, templates_for(EnvName::bricks));
  long detected = 0, live = 0;
  for (const auto& d : m.detections) detected += d.object_class == "brick";
  for (const auto& [id, o] : s.objects) live += o.object_class == "brick";
  EXPECT_EQ(detected, live);
  EXPECT_EQ(live, 43);
}

TEST(Match, FlipperPosesAllRecognised) {
  EnvState s = reset(EnvName::pinball_lite, 1);
  for (const char* a : {"noop", "left", "right", "both"}) {
    s = step(s, a).state;
    const auto m = match_objects(render(s), nullptr, templates_for(EnvName::pinball_lite));
    const Detection* d = m.find(object_id::controllable);
    ASSERT_NE(d, nullptr) << a;
    EXPECT_EQ(d->anchor, s.controllable().anchor);
  }
}

TEST(Match, PureAndDeterministic) {
  EnvState s = reset(EnvName::pinball_lite, 4);
  const Frame prev = render(s);
  s = step(s, "left").state;
  const Frame f = render(s);
  const auto t = templates_for(EnvName::pinball_lite);
  EXPECT_EQ(match_objects(f, &prev, t).detections, match_objects(f, &prev, t).detections);
}

TEST(RoundTrip, RandomReachableStates) {
  for (auto env : {EnvName::duel, EnvName::bricks, EnvName::pinball_lite}) {
    const auto stats = oracle::pixel_round_trip(env, 150, 21);
    EXPECT_EQ(stats.states, 150);
    EXPECT_GT(stats.objects_checked, 150);
    EXPECT_EQ(stats.mismatches, 0) << to_string(env);
  }
}

TEST(SnapshotFromFrame, MatchesStateSnapshot) {
  const EnvState s = reset(EnvName::bricks, 5);
  const auto a = snapshot_from_frame(render(s), palette::ball);
  const auto b = WorldSnapshot::from_state(s, object_id::ball);
  for (int y = 0; y < s.layout.height; ++y)
    for (int x = 0; x < s.layout.width; ++x) ASSERT_EQ(a.occupied(x, y), b.occupied(x, y));
}

}  // namespace
}  // namespace modarc
