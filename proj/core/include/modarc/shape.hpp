#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "modarc/geometry.hpp"

namespace modarc {

// Binary bitmap of an object's shape, row-major. At least one cell is set.
class ShapeBitmap {
 public:
  ShapeBitmap(int width, int height, std::vector<std::uint8_t> mask);

  static ShapeBitmap filled(int width, int height);
  // Rectangle with its corner cells cleared, used for round objects.
  static ShapeBitmap rounded(int size);
  // Regular octagon inscribed in a size x size box.
  static ShapeBitmap octagon(int size);
  // Rows of '#'/'.' characters; all rows must have equal length.
  static ShapeBitmap from_rows(const std::vector<std::string_view>& rows);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  bool at(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_ && mask_[y * width_ + x] != 0;
  }
  int cell_count() const;

  // Rounded centroid of the set cells, relative to the top-left corner.
  Vec2i centroid() const { return centroid_; }

  friend bool operator==(const ShapeBitmap& a, const ShapeBitmap& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.mask_ == b.mask_;
  }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> mask_;
  Vec2i centroid_;
};

}  // namespace modarc
