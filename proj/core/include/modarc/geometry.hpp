#pragma once

#include <algorithm>
#include <cmath>
#include <compare>

namespace modarc {

struct Vec2i {
  int x = 0;
  int y = 0;

  friend constexpr Vec2i operator+(Vec2i a, Vec2i b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2i operator-(Vec2i a, Vec2i b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr bool operator==(Vec2i, Vec2i) = default;
};

struct Vec2d {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2d() = default;
  constexpr Vec2d(double x_, double y_) : x(x_), y(y_) {}
  constexpr explicit Vec2d(Vec2i v) : x(v.x), y(v.y) {}

  friend constexpr Vec2d operator+(Vec2d a, Vec2d b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2d operator-(Vec2d a, Vec2d b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr bool operator==(Vec2d, Vec2d) = default;
};

inline double distance(Vec2d a, Vec2d b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline Vec2i round_to_pixel(Vec2d v) {
  return {static_cast<int>(std::floor(v.x + 0.5)), static_cast<int>(std::floor(v.y + 0.5))};
}

// Axis-aligned rectangle with inclusive integer bounds. An empty rectangle
// has x0 > x1.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  static constexpr Rect empty() { return {}; }
  static constexpr Rect point(Vec2i p) { return {p.x, p.y, p.x, p.y}; }

  constexpr bool is_empty() const { return x0 > x1 || y0 > y1; }
  constexpr int width() const { return is_empty() ? 0 : x1 - x0 + 1; }
  constexpr int height() const { return is_empty() ? 0 : y1 - y0 + 1; }

  constexpr bool contains(Vec2i p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  constexpr bool contains(Vec2d p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  constexpr bool overlaps(const Rect& o) const {
    return !is_empty() && !o.is_empty() && x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 &&
           o.y0 <= y1;
  }

  void expand_to(Vec2i p) {
    if (is_empty()) {
      *this = point(p);
      return;
    }
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }

  constexpr Rect inflated(int dx, int dy) const { return {x0 - dx, y0 - dy, x1 + dx, y1 + dy}; }

  Vec2d clamp(Vec2d p) const {
    return {std::clamp(p.x, double(x0), double(x1)), std::clamp(p.y, double(y0), double(y1))};
  }

  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

}  // namespace modarc
