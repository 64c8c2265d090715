#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modarc/arcade_env.hpp"
#include "modarc/frame.hpp"
#include "modarc/trajectory.hpp"

namespace modarc {

Mask color_select(const Frame& frame, std::uint8_t index);
// Throws ShapeError when dimensions differ.
Mask frame_diff(const Frame& a, const Frame& b);
// Chebyshev dilation by `radius` cells.
Mask dilate(const Mask& mask, int radius);

struct ShapeTemplate {
  int id = 0;  // object id for single-instance classes, class tag otherwise
  std::string object_class;
  std::uint8_t palette = 0;
  ObjectKind kind = ObjectKind::static_object;
  std::vector<ShapeBitmap> variants;  // alternate poses of one object
  int expected = 1;                   // instances that must be found; 0 = any number
};

// One template per object class of `env`, built from the simulator's own
// shapes.
std::vector<ShapeTemplate> templates_for(EnvName env, const EnvLayout& layout);
std::vector<ShapeTemplate> templates_for(EnvName env);

struct Detection {
  int template_id = 0;
  std::string object_class;
  Vec2i anchor;
  Vec2i center;
  int variant = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct MatchResult {
  std::vector<Detection> detections;
  std::vector<int> lost;  // template ids with fewer matches than expected

  bool tracking_lost(int template_id) const;
  const Detection* find(int template_id) const;
};

// `prev` may be null; moving templates then search without the diff gate.
MatchResult match_objects(const Frame& frame, const Frame* prev,
                          const std::vector<ShapeTemplate>& templates, int gate_radius = 3);

// Occupancy of every non-background cell not drawn in `exclude` palette.
WorldSnapshot snapshot_from_frame(const Frame& frame, std::uint8_t exclude);

// Object ids whose full shape is drawn on screen with its own color.
std::vector<int> unoccluded_objects(const EnvState& state);

}  // namespace modarc
