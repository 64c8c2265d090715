#include "modarc/arcade_env.hpp"

#include <algorithm>
#include <cstdlib>

#include "modarc/error.hpp"

namespace modarc {

namespace {

constexpr int kQ = 256;

int sign(int v) { return (v > 0) - (v < 0); }

int& axis_ref(Vec2i& v, int axis) { return axis == 0 ? v.x : v.y; }

const std::vector<std::string> kPaddleActions = {"noop", "left", "right"};
const std::vector<std::string> kFlipperActions = {"noop", "left", "right", "both"};

ObjectRecord make_object(const EnvLayout& layout, int id, std::string object_class,
                         ObjectKind kind, ShapeBitmap shape, Vec2i anchor,
                         std::vector<std::string> actions = {}) {
  ObjectRecord rec;
  rec.id = id;
  rec.object_class = std::move(object_class);
  rec.kind = kind;
  rec.shape = std::move(shape);
  rec.anchor = anchor;
  rec.action_set = std::move(actions);
  rec.observe(static_cast<std::size_t>(layout.history_capacity));
  return rec;
}

void add_side_walls(EnvState& s) {
  const auto& L = s.layout;
  s.objects.emplace(object_id::left_wall,
                    make_object(L, object_id::left_wall, "wall", ObjectKind::static_object,
                                ShapeBitmap::filled(L.wall_thickness, L.height), {0, 0}));
  s.objects.emplace(
      object_id::right_wall,
      make_object(L, object_id::right_wall, "wall", ObjectKind::static_object,
                  ShapeBitmap::filled(L.wall_thickness, L.height),
                  {L.width - L.wall_thickness, 0}));
}

void add_top_wall(EnvState& s) {
  const auto& L = s.layout;
  s.objects.emplace(object_id::top_wall,
                    make_object(L, object_id::top_wall, "wall", ObjectKind::static_object,
                                ShapeBitmap::filled(L.width, L.wall_thickness), {0, 0}));
}

void serve(EnvState& s) {
  const auto& L = s.layout;
  auto& ball = s.objects.at(object_id::ball);
  s.ball_fraction_q8 = {0, 0};
  if (s.env == EnvName::pinball_lite) {
    std::uniform_int_distribution<int> x_dist(30, L.width - 35);
    std::uniform_int_distribution<int> vx_dist(-kQ / 2, kQ / 2);
    ball.anchor = {x_dist(s.rng), 16};
    s.ball_velocity_q8 = {vx_dist(s.rng), 0};
    return;
  }
  std::uniform_int_distribution<int> vx_dist(-L.serve_vx_max, L.serve_vx_max);
  const int y = s.env == EnvName::duel ? (L.height - L.ball_size) / 2 : 110;
  ball.anchor = {(L.width - L.ball_size) / 2, y};
  s.ball_velocity_q8 = {vx_dist(s.rng) * kQ, L.ball_vy * kQ};
}

// Mutable single-tick simulation over a state copy.
class Ticker {
 public:
  Ticker(EnvState& s, int action, std::vector<RewardEvent>& rewards,
         std::vector<ContactEvent>& contacts)
      : s_(s), L_(s.layout), action_(action), rewards_(rewards), contacts_(contacts) {}

  void run() {
    ++s_.tick;
    if (s_.env == EnvName::pinball_lite) {
      apply_flipper_action();
    } else {
      move_paddle(s_.objects.at(object_id::controllable),
                  action_ == 1 ? -1 : (action_ == 2 ? 1 : 0), L_.paddle_speed);
    }
    if (s_.env == EnvName::duel) move_opponent();
    move_ball();
  }

 private:
  ObjectRecord& ball() { return s_.objects.at(object_id::ball); }
  Vec2i ball_center() { return ball().center(); }

  void emit_reward(double amount) {
    s_.score += amount;
    rewards_.push_back({amount, s_.tick});
  }

  bool overlaps_ball(const ObjectRecord& obj, Vec2i anchor) {
    auto& b = ball();
    return shapes_overlap(obj.shape, anchor, b.shape, b.anchor);
  }

  void move_paddle(ObjectRecord& paddle, int dir, int speed) {
    if (dir == 0) return;
    const int lo = L_.wall_thickness;
    const int hi = L_.width - L_.wall_thickness - paddle.shape.width();
    for (int i = 0; i < speed; ++i) {
      Vec2i cand = paddle.anchor + Vec2i{dir, 0};
      if (cand.x < lo || cand.x > hi || overlaps_ball(paddle, cand)) break;
      paddle.anchor = cand;
    }
  }

  void move_opponent() {
    auto& opp = s_.objects.at(object_id::opponent);
    const int target = s_.ball_velocity_q8.y < 0 ? ball_center().x : L_.width / 2;
    const int delta = target - opp.center().x;
    const int steps = std::min(std::abs(delta), L_.opponent_speed);
    move_paddle(opp, sign(delta), steps);
  }

  void apply_flipper_action() {
    int pose = s_.flipper_pose;
    if (action_ == 1) pose = 1;
    if (action_ == 2) pose = 2;
    if (action_ == 3) pose = 3;
    if (pose == s_.flipper_pose) return;
    s_.flipper_pose = pose;
    auto& flippers = s_.objects.at(object_id::controllable);
    flippers.shape = flipper_shape(L_, pose);
    auto& b = ball();
    if (!shapes_overlap(flippers.shape, flippers.anchor, b.shape, b.anchor)) return;
    // A raised flipper swept into the ball: lift the ball clear and launch it.
    for (int i = 0; i < 12 && shapes_overlap(flippers.shape, flippers.anchor, b.shape, b.anchor);
         ++i) {
      b.anchor.y -= 1;
    }
    flipper_hit(1, 1);
  }

  std::vector<int> colliders(Vec2i cand) {
    std::vector<int> hits;
    const auto& b = ball();
    const Rect bb{cand.x, cand.y, cand.x + b.shape.width() - 1, cand.y + b.shape.height() - 1};
    for (const auto& [id, obj] : s_.objects) {
      if (id == object_id::ball) continue;
      if (!obj.bounds().overlaps(bb)) continue;
      if (shapes_overlap(obj.shape, obj.anchor, b.shape, cand)) hits.push_back(id);
    }
    return hits;
  }

  Vec2i hit_offset(const ObjectRecord& ctrl, bool miss) {
    const Vec2i c = ctrl.center();
    const Vec2i bc = ball_center();
    const int half_w = (ctrl.shape.width() - 1) / 2;
    const int half_h = (ctrl.shape.height() - 1) / 2;
    int dx = bc.x - c.x;
    if (miss) {
      dx = std::abs(dx) > half_w ? sign(dx) * (half_w + 1) : (dx < 0 ? -1 : 1) * (half_w + 1);
    } else {
      dx = std::clamp(dx, -half_w, half_w);
    }
    const int dy = std::clamp(bc.y - c.y, -(half_h + 1), half_h + 1);
    return {dx, dy};
  }

  void emit_contact(int other, bool miss) {
    const auto& ctrl = s_.objects.at(object_id::controllable);
    contacts_.push_back({ctrl.id, other, hit_offset(ctrl, miss), s_.tick, miss});
  }

  // Returns true when the velocity was set explicitly (no plain reflection).
  bool flipper_hit(int axis, int dir) {
    emit_contact(object_id::ball, false);
    const int mid = L_.wall_thickness + (L_.width - 2 * L_.wall_thickness) / 2;
    const int bx = ball_center().x;
    const bool left = bx < mid;
    const bool raised = (s_.flipper_pose & (left ? 1 : 2)) != 0;
    auto& v = s_.ball_velocity_q8;
    if (raised && axis == 1 && dir > 0) {
      const int bar_w = (L_.width - 2 * L_.wall_thickness) / 2;
      const int bar_cx2 = 2 * L_.wall_thickness + (left ? bar_w - 1 : 3 * bar_w - 1);
      v.y = -L_.kick_q8;
      v.x = std::clamp((2 * bx - bar_cx2) * kQ / 16, -3 * kQ, 3 * kQ);
      s_.ball_fraction_q8 = {0, 0};
      return true;
    }
    v.x += left ? kQ / 4 : -kQ / 4;
    return false;
  }

  bool resolve(int axis, int dir, const std::vector<int>& hits) {
    auto& v = s_.ball_velocity_q8;
    bool explicit_velocity = false;
    bool bumper = false;
    int bumper_cx = 0;
    for (int id : hits) {
      auto it = s_.objects.find(id);
      const ObjectRecord& obj = it->second;
      if (obj.object_class == "paddle") {
        emit_contact(id == object_id::controllable ? object_id::ball : id, false);
        if (axis == 1 && dir > 0) {
          const int dx = hit_offset(obj, false).x;
          v.x = sign(dx) * kReboundTable[std::min(std::abs(dx), 7)] * kQ;
          v.y = -std::abs(v.y);
          s_.ball_fraction_q8.x = 0;
          explicit_velocity = true;
        }
      } else if (obj.object_class == "flippers") {
        explicit_velocity = flipper_hit(axis, dir) || explicit_velocity;
      } else if (obj.object_class == "brick") {
        s_.objects.erase(it);
        emit_reward(1.0);
      } else if (obj.object_class == "bumper") {
        bumper = true;
        bumper_cx = obj.center().x;
        emit_reward(1.0);
      }
    }
    if (!explicit_velocity) {
      axis_ref(v, axis) = -axis_ref(v, axis);
      if (bumper) {
        int& comp = axis_ref(v, axis);
        comp = -dir * std::max(std::abs(comp), 2 * kQ);
        v.x += ball_center().x < bumper_cx ? -kQ / 4 : kQ / 4;
      }
    }
    v.x = std::clamp(v.x, -L_.max_speed_q8, L_.max_speed_q8);
    v.y = std::clamp(v.y, -L_.max_speed_q8, L_.max_speed_q8);
    return explicit_velocity;
  }

  // Returns -1 when the ball left through the top, +1 through the bottom.
  int move_axis(int axis, int amount) {
    int dir = sign(amount);
    int remaining = std::abs(amount);
    while (remaining > 0) {
      auto& b = ball();
      Vec2i cand = b.anchor;
      axis_ref(cand, axis) += dir;
      if (axis == 1 && cand.y < 0) return -1;
      if (axis == 1 && cand.y + b.shape.height() > L_.height) return 1;
      auto hits = colliders(cand);
      if (hits.empty()) {
        b.anchor = cand;
        --remaining;
        continue;
      }
      resolve(axis, dir, hits);
      const int new_dir = sign(axis_ref(s_.ball_velocity_q8, axis));
      if (new_dir == 0 || new_dir == dir) break;
      dir = new_dir;
      --remaining;
    }
    return 0;
  }

  void move_ball() {
    auto& v = s_.ball_velocity_q8;
    if (s_.env == EnvName::pinball_lite) {
      v.y = std::min(v.y + L_.gravity_q8, L_.max_speed_q8);
    }
    auto& f = s_.ball_fraction_q8;
    f.x += v.x;
    f.y += v.y;
    const int dx = f.x >> 8;
    const int dy = f.y >> 8;
    f.x -= dx * kQ;
    f.y -= dy * kQ;
    int exit = move_axis(0, dx);
    if (exit == 0) exit = move_axis(1, dy);
    if (exit != 0) handle_exit(exit);
  }

  void handle_exit(int side) {
    switch (s_.env) {
      case EnvName::duel:
        if (side < 0) {
          ++s_.agent_points;
          emit_reward(1.0);
        } else {
          ++s_.opponent_points;
          emit_contact(object_id::ball, true);
          emit_reward(-1.0);
        }
        if (s_.agent_points >= L_.win_points || s_.opponent_points >= L_.win_points) {
          s_.terminal = true;
        }
        break;
      case EnvName::bricks:
      case EnvName::pinball_lite:
        if (side < 0) {
          // Unreachable with a top wall present; bounce back in.
          s_.ball_velocity_q8.y = std::abs(s_.ball_velocity_q8.y);
          return;
        }
        emit_contact(object_id::ball, true);
        if (--s_.lives <= 0) s_.terminal = true;
        break;
    }
    if (!s_.terminal) serve(s_);
  }

  EnvState& s_;
  const EnvLayout& L_;
  int action_;
  std::vector<RewardEvent>& rewards_;
  std::vector<ContactEvent>& contacts_;
};

bool has_bricks(const EnvState& s) {
  for (const auto& [id, obj] : s.objects) {
    if (obj.object_class == "brick") return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(EnvName env) {
  switch (env) {
    case EnvName::duel:
      return "duel";
    case EnvName::bricks:
      return "bricks";
    case EnvName::pinball_lite:
      return "pinball_lite";
  }
  return "?";
}

EnvName parse_env_name(std::string_view name) {
  if (name == "duel") return EnvName::duel;
  if (name == "bricks") return EnvName::bricks;
  if (name == "pinball_lite") return EnvName::pinball_lite;
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

std::string_view to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::controllable:
      return "controllable";
    case ObjectKind::non_controllable:
      return "non_controllable";
    case ObjectKind::static_object:
      return "static";
  }
  return "?";
}

std::uint8_t palette_for_class(std::string_view cls) {
  if (cls == "wall") return palette::wall;
  if (cls == "brick") return palette::brick;
  if (cls == "bumper") return palette::bumper;
  if (cls == "ball") return palette::ball;
  if (cls == "paddle") return palette::paddle;
  if (cls == "opponent") return palette::opponent;
  if (cls == "flippers") return palette::flippers;
  return palette::background;
}

void ObjectRecord::observe(std::size_t capacity) {
  const Vec2i c = center();
  if (!position_history.empty()) velocity_history.push_back(c - position_history.back());
  position_history.push_back(c);
  while (position_history.size() > capacity) position_history.pop_front();
  while (velocity_history.size() + 1 > position_history.size()) velocity_history.pop_front();
  observed_area.expand_to(c);
}

bool shapes_overlap(const ShapeBitmap& a, Vec2i pa, const ShapeBitmap& b, Vec2i pb) {
  const int x0 = std::max(pa.x, pb.x);
  const int y0 = std::max(pa.y, pb.y);
  const int x1 = std::min(pa.x + a.width(), pb.x + b.width());
  const int y1 = std::min(pa.y + a.height(), pb.y + b.height());
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      if (a.at(x - pa.x, y - pa.y) && b.at(x - pb.x, y - pb.y)) return true;
    }
  }
  return false;
}

const ObjectRecord& EnvState::controllable() const { return objects.at(object_id::controllable); }

const ObjectRecord* EnvState::ball() const {
  auto it = objects.find(object_id::ball);
  return it == objects.end() ? nullptr : &it->second;
}

EnvLayout default_layout(EnvName env) {
  EnvLayout L;
  if (env == EnvName::pinball_lite) L.balls = 3;
  return L;
}

EnvLayout load_layout(EnvName env, const KvConfig& cfg) {
  EnvLayout L = default_layout(env);
  struct Field {
    const char* key;
    int EnvLayout::*member;
  };
  static const Field fields[] = {
      {"width", &EnvLayout::width},
      {"height", &EnvLayout::height},
      {"wall_thickness", &EnvLayout::wall_thickness},
      {"history_capacity", &EnvLayout::history_capacity},
      {"ball_size", &EnvLayout::ball_size},
      {"ball_vy", &EnvLayout::ball_vy},
      {"serve_vx_max", &EnvLayout::serve_vx_max},
      {"paddle_width", &EnvLayout::paddle_width},
      {"paddle_height", &EnvLayout::paddle_height},
      {"paddle_y", &EnvLayout::paddle_y},
      {"paddle_speed", &EnvLayout::paddle_speed},
      {"opponent_y", &EnvLayout::opponent_y},
      {"opponent_speed", &EnvLayout::opponent_speed},
      {"win_points", &EnvLayout::win_points},
      {"brick_rows", &EnvLayout::brick_rows},
      {"brick_cols", &EnvLayout::brick_cols},
      {"brick_width", &EnvLayout::brick_width},
      {"brick_height", &EnvLayout::brick_height},
      {"brick_gap", &EnvLayout::brick_gap},
      {"brick_left", &EnvLayout::brick_left},
      {"brick_top", &EnvLayout::brick_top},
      {"lives", &EnvLayout::lives},
      {"balls", &EnvLayout::balls},
      {"gravity_q8", &EnvLayout::gravity_q8},
      {"kick_q8", &EnvLayout::kick_q8},
      {"max_speed_q8", &EnvLayout::max_speed_q8},
      {"flipper_y", &EnvLayout::flipper_y},
      {"bumper_size", &EnvLayout::bumper_size},
  };
  for (const auto& [key, value] : cfg.entries()) {
    auto it = std::find_if(std::begin(fields), std::end(fields),
                           [&](const Field& f) { return key == f.key; });
    if (it == std::end(fields)) throw ConfigError("unknown layout key '" + key + "'");
    L.*(it->member) = static_cast<int>(cfg.get_int(key, 0));
  }
  if (L.width < 32 || L.height < 32 || L.ball_size < 1 || L.paddle_width < 1 ||
      L.paddle_width % 2 == 0 || L.history_capacity < 2 || L.brick_rows < 1 ||
      L.brick_cols < 1) {
    throw ConfigError("invalid layout for " + std::string(to_string(env)));
  }
  return L;
}

ShapeBitmap flipper_shape(const EnvLayout& L, int pose) {
  const int w = L.width - 2 * L.wall_thickness;
  const int h = 8;
  const int bar = w / 2;
  const int stub = 8;
  std::vector<std::uint8_t> mask(std::size_t(w) * h, 0);
  auto fill = [&](int x0, int x1, int y0, int y1) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) mask[std::size_t(y) * w + x] = 1;
  };
  if (pose & 1) fill(0, bar - 1, 0, 2); else fill(0, stub - 1, 5, 7);
  if (pose & 2) fill(bar, w - 1, 0, 2); else fill(w - stub, w - 1, 5, 7);
  return ShapeBitmap(w, h, std::move(mask));
}

EnvState reset(EnvName env, std::uint64_t seed) { return reset(env, seed, default_layout(env)); }

EnvState reset(EnvName env, std::uint64_t seed, const EnvLayout& layout) {
  EnvState s;
  s.env = env;
  s.layout = layout;
  s.rng.seed(seed);
  const auto& L = s.layout;
  const ShapeBitmap ball_shape = ShapeBitmap::rounded(L.ball_size);
  const ShapeBitmap paddle_shape = ShapeBitmap::filled(L.paddle_width, L.paddle_height);
  const int paddle_x = (L.width - L.paddle_width) / 2;

  add_side_walls(s);
  switch (env) {
    case EnvName::duel:
      s.objects.emplace(object_id::opponent,
                        make_object(L, object_id::opponent, "opponent",
                                    ObjectKind::non_controllable, paddle_shape,
                                    {paddle_x, L.opponent_y}));
      s.lives = 0;
      break;
    case EnvName::bricks:
      add_top_wall(s);
      for (int r = 0; r < L.brick_rows; ++r) {
        for (int c = 0; c < L.brick_cols; ++c) {
          const int id = object_id::first_brick + r * L.brick_cols + c;
          s.objects.emplace(
              id, make_object(L, id, "brick", ObjectKind::static_object,
                              ShapeBitmap::filled(L.brick_width, L.brick_height),
                              {L.brick_left + c * (L.brick_width + L.brick_gap),
                               L.brick_top + r * (L.brick_height + L.brick_gap)}));
        }
      }
      s.lives = L.lives;
      break;
    case EnvName::pinball_lite: {
      add_top_wall(s);
      const Vec2i centers[] = {{40, 56}, {120, 56}, {80, 36}, {56, 100}, {104, 100}};
      const int half = L.bumper_size / 2;
      int id = object_id::first_bumper;
      for (Vec2i c : centers) {
        s.objects.emplace(id, make_object(L, id, "bumper", ObjectKind::static_object,
                                          ShapeBitmap::octagon(L.bumper_size),
                                          c - Vec2i{half, half}));
        ++id;
      }
      s.lives = L.balls;
      break;
    }
  }
  if (env == EnvName::pinball_lite) {
    s.objects.emplace(object_id::controllable,
                      make_object(L, object_id::controllable, "flippers",
                                  ObjectKind::controllable, flipper_shape(L, 0),
                                  {L.wall_thickness, L.flipper_y}, kFlipperActions));
  } else {
    s.objects.emplace(object_id::controllable,
                      make_object(L, object_id::controllable, "paddle",
                                  ObjectKind::controllable, paddle_shape,
                                  {paddle_x, L.paddle_y}, kPaddleActions));
  }
  s.objects.emplace(object_id::ball, make_object(L, object_id::ball, "ball",
                                                 ObjectKind::non_controllable, ball_shape,
                                                 {0, 0}));
  serve(s);
  // Replace the placeholder history with the served position.
  auto& ball = s.objects.at(object_id::ball);
  ball.position_history.clear();
  ball.velocity_history.clear();
  ball.observed_area = Rect::empty();
  ball.observe(static_cast<std::size_t>(L.history_capacity));
  return s;
}

StepResult step(const EnvState& state, std::string_view action, int frame_skip) {
  if (frame_skip < 1) throw ConfigError("frame_skip must be >= 1");
  if (state.terminal) throw EpisodeFinishedError("step called on a finished episode");
  const auto& actions = state.action_set();
  auto it = std::find(actions.begin(), actions.end(), action);
  if (it == actions.end()) {
    throw InvalidActionError("action '" + std::string(action) + "' not in action set");
  }
  const int index = static_cast<int>(it - actions.begin());

  StepResult out{state, {}, {}};
  EnvState& s = out.state;
  for (int i = 0; i < frame_skip && !s.terminal; ++i) {
    Ticker(s, index, out.rewards, out.contacts).run();
    if (s.env == EnvName::bricks && !has_bricks(s)) s.terminal = true;
  }
  const auto cap = static_cast<std::size_t>(s.layout.history_capacity);
  for (auto& [id, obj] : s.objects) {
    if (obj.kind != ObjectKind::static_object) obj.observe(cap);
  }
  return out;
}

Frame render(const EnvState& state) {
  Frame frame(state.layout.width, state.layout.height, palette::background);
  auto draw = [&](const ObjectRecord& obj) {
    const auto color = palette_for_class(obj.object_class);
    for (int y = 0; y < obj.shape.height(); ++y) {
      for (int x = 0; x < obj.shape.width(); ++x) {
        const int px = obj.anchor.x + x;
        const int py = obj.anchor.y + y;
        if (obj.shape.at(x, y) && frame.inside(px, py)) frame.at(px, py) = color;
      }
    }
  };
  // Static scenery, then the ball, then movers on top (they occlude the ball).
  for (const auto& [id, obj] : state.objects)
    if (obj.kind == ObjectKind::static_object) draw(obj);
  if (const auto* b = state.ball()) draw(*b);
  for (const auto& [id, obj] : state.objects)
    if (obj.kind != ObjectKind::static_object && id != object_id::ball) draw(obj);
  return frame;
}

}  // namespace modarc
