#include "modarc/pixel.hpp"

#include <algorithm>

#include "modarc/error.hpp"

namespace modarc {

Mask color_select(const Frame& frame, std::uint8_t index) {
  Mask m(frame.width, frame.height);
  for (std::size_t i = 0; i < frame.cells.size(); ++i) m.bits[i] = frame.cells[i] == index;
  return m;
}

Mask frame_diff(const Frame& a, const Frame& b) {
  if (a.width != b.width || a.height != b.height) {
    throw ShapeError("frame_diff: dimension mismatch");
  }
  Mask m(a.width, a.height);
  for (std::size_t i = 0; i < a.cells.size(); ++i) m.bits[i] = a.cells[i] != b.cells[i];
  return m;
}

Mask dilate(const Mask& mask, int radius) {
  if (radius <= 0) return mask;
  // Separable: rows, then columns.
  Mask rows(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      for (int dx = std::max(0, x - radius); dx <= std::min(mask.width - 1, x + radius); ++dx)
        rows.set(dx, y);
    }
  }
  Mask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!rows.at(x, y)) continue;
      for (int dy = std::max(0, y - radius); dy <= std::min(mask.height - 1, y + radius); ++dy)
        out.set(x, dy);
    }
  }
  return out;
}

std::vector<ShapeTemplate> templates_for(EnvName env, const EnvLayout& layout) {
  const EnvState state = reset(env, 0, layout);
  std::vector<ShapeTemplate> out;
  for (const auto& [id, obj] : state.objects) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const ShapeTemplate& t) { return t.object_class == obj.object_class; });
    if (it == out.end()) {
      ShapeTemplate t;
      t.id = obj.kind == ObjectKind::static_object ? -int(palette_for_class(obj.object_class)) : id;
      t.object_class = obj.object_class;
      t.palette = palette_for_class(obj.object_class);
      t.kind = obj.kind;
      t.expected = 0;
      out.push_back(t);
      it = out.end() - 1;
    }
    if (obj.kind != ObjectKind::static_object) it->expected = 1;
    if (std::find(it->variants.begin(), it->variants.end(), obj.shape) == it->variants.end()) {
      it->variants.push_back(obj.shape);
    }
  }
  if (env == EnvName::pinball_lite) {
    for (auto& t : out) {
      if (t.object_class != "flippers") continue;
      t.variants.clear();
      for (int pose = 0; pose < 4; ++pose) t.variants.push_back(flipper_shape(layout, pose));
    }
  }
  // Wider variants first so a pose whose cells contain another's wins.
  for (auto& t : out) {
    std::stable_sort(t.variants.begin(), t.variants.end(),
                     [](const ShapeBitmap& a, const ShapeBitmap& b) {
                       return a.cell_count() > b.cell_count();
                     });
  }
  return out;
}

std::vector<ShapeTemplate> templates_for(EnvName env) {
  return templates_for(env, default_layout(env));
}

bool MatchResult::tracking_lost(int template_id) const {
  return std::find(lost.begin(), lost.end(), template_id) != lost.end();
}

const Detection* MatchResult::find(int template_id) const {
  for (const auto& d : detections)
    if (d.template_id == template_id) return &d;
  return nullptr;
}

namespace {

Vec2i first_cell(const ShapeBitmap& s) {
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x)
      if (s.at(x, y)) return {x, y};
  return {0, 0};
}

bool fits(const ShapeBitmap& s, Vec2i anchor, const Mask& color, const Mask& used) {
  for (int y = 0; y < s.height(); ++y) {
    for (int x = 0; x < s.width(); ++x) {
      if (!s.at(x, y)) continue;
      const int px = anchor.x + x;
      const int py = anchor.y + y;
      if (px < 0 || py < 0 || px >= color.width || py >= color.height) return false;
      if (!color.at(px, py) || used.at(px, py)) return false;
    }
  }
  return true;
}

void consume(const ShapeBitmap& s, Vec2i anchor, Mask& used) {
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x)
      if (s.at(x, y)) used.set(anchor.x + x, anchor.y + y);
}

std::vector<Detection> scan(const ShapeTemplate& t, const Mask& color, const Mask* gate) {
  std::vector<Detection> found;
  Mask used(color.width, color.height);
  std::vector<Vec2i> firsts;
  for (const auto& v : t.variants) firsts.push_back(first_cell(v));
  for (int y = 0; y < color.height; ++y) {
    for (int x = 0; x < color.width; ++x) {
      if (!color.at(x, y) || used.at(x, y)) continue;
      if (gate && !gate->at(x, y)) continue;
      // Row-major scan: an unclaimed colored cell must be the first cell of
      // whichever instance covers it.
      for (std::size_t v = 0; v < t.variants.size(); ++v) {
        const Vec2i anchor{x - firsts[v].x, y - firsts[v].y};
        if (!fits(t.variants[v], anchor, color, used)) continue;
        consume(t.variants[v], anchor, used);
        found.push_back({t.id, t.object_class, anchor, anchor + t.variants[v].centroid(), int(v)});
        break;
      }
      if (t.expected > 0 && static_cast<int>(found.size()) == t.expected) return found;
    }
  }
  return found;
}

}  // namespace

MatchResult match_objects(const Frame& frame, const Frame* prev,
                          const std::vector<ShapeTemplate>& templates, int gate_radius) {
  if (templates.empty()) throw ConfigError("match_objects needs at least one template");
  MatchResult result;
  std::optional<Mask> gate;
  if (prev) gate = dilate(frame_diff(frame, *prev), gate_radius);
  for (const auto& t : templates) {
    const Mask color = color_select(frame, t.palette);
    std::vector<Detection> found;
    if (t.kind != ObjectKind::static_object && gate) found = scan(t, color, &*gate);
    // Stationary movers produce no diff; fall back to the ungated search.
    if (found.size() < static_cast<std::size_t>(t.expected) || found.empty()) {
      found = scan(t, color, nullptr);
    }
    if (static_cast<int>(found.size()) < t.expected) result.lost.push_back(t.id);
    result.detections.insert(result.detections.end(), found.begin(), found.end());
  }
  return result;
}

WorldSnapshot snapshot_from_frame(const Frame& frame, std::uint8_t exclude) {
  WorldSnapshot world(frame.width, frame.height);
  static const ShapeBitmap cell = ShapeBitmap::filled(1, 1);
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      const auto c = frame.at(x, y);
      if (c != palette::background && c != exclude) world.add(cell, {x, y});
    }
  }
  return world;
}

std::vector<int> unoccluded_objects(const EnvState& state) {
  const Frame frame = render(state);
  std::vector<int> ids;
  for (const auto& [id, obj] : state.objects) {
    const auto color = palette_for_class(obj.object_class);
    bool whole = true;
    for (int y = 0; y < obj.shape.height() && whole; ++y) {
      for (int x = 0; x < obj.shape.width() && whole; ++x) {
        if (!obj.shape.at(x, y)) continue;
        const int px = obj.anchor.x + x;
        const int py = obj.anchor.y + y;
        whole = frame.inside(px, py) && frame.at(px, py) == color;
      }
    }
    if (whole) ids.push_back(id);
  }
  return ids;
}

}  // namespace modarc
