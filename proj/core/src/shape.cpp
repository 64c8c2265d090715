#include "modarc/shape.hpp"

#include <cmath>
#include <string>

#include "modarc/error.hpp"

namespace modarc {

ShapeBitmap::ShapeBitmap(int width, int height, std::vector<std::uint8_t> mask)
    : width_(width), height_(height), mask_(std::move(mask)) {
  if (width_ < 1 || height_ < 1) {
    throw ShapeError("shape dimensions must be positive");
  }
  if (mask_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
    throw ShapeError("shape mask length " + std::to_string(mask_.size()) + " != " +
                     std::to_string(width_) + "x" + std::to_string(height_));
  }
  long sx = 0, sy = 0, n = 0;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (mask_[y * width_ + x] != 0) {
        mask_[y * width_ + x] = 1;
        sx += x;
        sy += y;
        ++n;
      }
    }
  }
  if (n == 0) throw ShapeError("shape mask has no set cells");
  centroid_ = {static_cast<int>(std::floor(double(sx) / n + 0.5)),
               static_cast<int>(std::floor(double(sy) / n + 0.5))};
}

ShapeBitmap ShapeBitmap::filled(int width, int height) {
  return ShapeBitmap(width, height,
                     std::vector<std::uint8_t>(std::size_t(std::max(width, 0)) *
                                                   std::size_t(std::max(height, 0)),
                                               1));
}

ShapeBitmap ShapeBitmap::rounded(int size) {
  std::vector<std::uint8_t> mask(std::size_t(size) * size, 1);
  if (size >= 3) {
    mask[0] = mask[size - 1] = 0;
    mask[(size - 1) * size] = mask[size * size - 1] = 0;
  }
  return ShapeBitmap(size, size, std::move(mask));
}

ShapeBitmap ShapeBitmap::octagon(int size) {
  const int cut = size / 3;
  std::vector<std::uint8_t> mask(std::size_t(size) * size, 0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const int dx = std::min(x, size - 1 - x);
      const int dy = std::min(y, size - 1 - y);
      mask[y * size + x] = (dx + dy >= cut) ? 1 : 0;
    }
  }
  return ShapeBitmap(size, size, std::move(mask));
}

ShapeBitmap ShapeBitmap::from_rows(const std::vector<std::string_view>& rows) {
  if (rows.empty()) throw ShapeError("shape needs at least one row");
  const int w = static_cast<int>(rows.front().size());
  std::vector<std::uint8_t> mask;
  for (auto row : rows) {
    if (static_cast<int>(row.size()) != w) throw ShapeError("ragged shape rows");
    for (char c : row) mask.push_back(c == '#' ? 1 : 0);
  }
  return ShapeBitmap(w, static_cast<int>(rows.size()), std::move(mask));
}

int ShapeBitmap::cell_count() const {
  int n = 0;
  for (auto c : mask_) n += c;
  return n;
}

}  // namespace modarc
