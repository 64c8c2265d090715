#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "modarc/frame.hpp"
#include "modarc/geometry.hpp"
#include "modarc/kv_config.hpp"
#include "modarc/shape.hpp"

namespace modarc {

enum class EnvName { duel, bricks, pinball_lite };

std::string_view to_string(EnvName env);
EnvName parse_env_name(std::string_view name);

enum class ObjectKind { controllable, non_controllable, static_object };

std::string_view to_string(ObjectKind kind);

// Palette indices. Each object class draws with its own index, so pixel
// extraction can be exact.
namespace palette {
inline constexpr std::uint8_t background = 0;
inline constexpr std::uint8_t wall = 1;
inline constexpr std::uint8_t brick = 2;
inline constexpr std::uint8_t bumper = 3;
inline constexpr std::uint8_t ball = 4;
inline constexpr std::uint8_t paddle = 5;
inline constexpr std::uint8_t opponent = 6;
inline constexpr std::uint8_t flippers = 7;
inline constexpr int size = 8;
}  // namespace palette

std::uint8_t palette_for_class(std::string_view object_class);

struct ObjectRecord {
  int id = 0;
  std::string object_class;
  ObjectKind kind = ObjectKind::static_object;
  ShapeBitmap shape = ShapeBitmap::filled(1, 1);
  Vec2i anchor;  // top-left of the shape's bounding box
  std::deque<Vec2i> position_history;  // shape centers, newest last
  std::deque<Vec2i> velocity_history;  // velocity_history[i] = pos[i+1] - pos[i]
  Rect observed_area;
  std::vector<std::string> action_set;

  Vec2i center() const { return anchor + shape.centroid(); }
  Rect bounds() const {
    return {anchor.x, anchor.y, anchor.x + shape.width() - 1, anchor.y + shape.height() - 1};
  }

  // Appends the current center to the histories (bounded by `capacity`)
  // and grows the observed area.
  void observe(std::size_t capacity);

  friend bool operator==(const ObjectRecord&, const ObjectRecord&) = default;
};

bool shapes_overlap(const ShapeBitmap& a, Vec2i anchor_a, const ShapeBitmap& b, Vec2i anchor_b);

struct RewardEvent {
  double amount = 0.0;
  long tick = 0;

  friend bool operator==(const RewardEvent&, const RewardEvent&) = default;
};

// Contact between the controllable object and another object. `offset` is
// the contact point relative to the controllable shape's center. A miss
// (the ball passing the controllable's line untouched) is reported with
// `miss = true` and an offset just beyond the shape edge.
struct ContactEvent {
  int controllable_id = 0;
  int other_id = 0;
  Vec2i offset;
  long tick = 0;
  bool miss = false;

  friend bool operator==(const ContactEvent&, const ContactEvent&) = default;
};

// Fixed per-environment geometry and physics constants. Velocities and
// accelerations marked _q8 are fixed point with 8 fractional bits.
struct EnvLayout {
  int width = 160;
  int height = 192;
  int wall_thickness = 4;
  int history_capacity = 16;

  int ball_size = 5;
  int ball_vy = 2;
  int serve_vx_max = 2;

  int paddle_width = 15;
  int paddle_height = 3;
  int paddle_y = 180;
  int paddle_speed = 2;

  int opponent_y = 8;
  int opponent_speed = 1;
  int win_points = 21;

  int brick_rows = 6;
  int brick_cols = 10;
  int brick_width = 14;
  int brick_height = 6;
  int brick_gap = 1;
  int brick_left = 5;
  int brick_top = 24;
  int lives = 5;

  int balls = 3;
  int gravity_q8 = 12;
  int kick_q8 = 1024;
  int max_speed_q8 = 1280;
  int flipper_y = 178;
  int bumper_size = 15;

  friend bool operator==(const EnvLayout&, const EnvLayout&) = default;
};

EnvLayout default_layout(EnvName env);
// Overrides defaults with any matching keys in `cfg`; unknown keys are
// rejected.
EnvLayout load_layout(EnvName env, const KvConfig& cfg);

// Outgoing |vx| (pixels per tick) after a paddle hit, indexed by |dx| of the
// contact offset. Monotone; the edge gives the steepest angle.
inline constexpr int kReboundTable[8] = {0, 0, 1, 1, 2, 2, 3, 3};

struct EnvState {
  EnvName env = EnvName::duel;
  EnvLayout layout;
  long tick = 0;
  std::map<int, ObjectRecord> objects;
  double score = 0.0;
  bool terminal = false;

  // Physics internals.
  std::mt19937_64 rng;
  Vec2i ball_velocity_q8;
  Vec2i ball_fraction_q8;
  int lives = 0;
  int agent_points = 0;
  int opponent_points = 0;
  int flipper_pose = 0;  // bit 0: left raised, bit 1: right raised

  const ObjectRecord& controllable() const;
  const ObjectRecord* ball() const;
  const std::vector<std::string>& action_set() const { return controllable().action_set; }

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

// Stable object ids shared by all environments.
namespace object_id {
inline constexpr int left_wall = 1;
inline constexpr int right_wall = 2;
inline constexpr int top_wall = 3;
inline constexpr int controllable = 10;
inline constexpr int ball = 20;
inline constexpr int opponent = 30;
inline constexpr int first_brick = 100;
inline constexpr int first_bumper = 200;
}  // namespace object_id

struct StepResult {
  EnvState state;
  std::vector<RewardEvent> rewards;
  std::vector<ContactEvent> contacts;
};

EnvState reset(EnvName env, std::uint64_t seed);
EnvState reset(EnvName env, std::uint64_t seed, const EnvLayout& layout);

// Advances `frame_skip` ticks with `action` held. Throws InvalidActionError
// for labels outside the action set and EpisodeFinishedError on terminal
// states.
StepResult step(const EnvState& state, std::string_view action, int frame_skip = 2);

Frame render(const EnvState& state);

// Pinball flipper-pair shape for a pose, in the pair's fixed bounding box.
ShapeBitmap flipper_shape(const EnvLayout& layout, int pose);

}  // namespace modarc
