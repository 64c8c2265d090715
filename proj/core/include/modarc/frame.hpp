#pragma once

#include <cstdint>
#include <vector>

namespace modarc {

// Palette-indexed pixel frame, row-major.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> cells;

  Frame() = default;
  Frame(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), cells(std::size_t(w) * std::size_t(h), fill) {}

  std::uint8_t at(int x, int y) const { return cells[std::size_t(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return cells[std::size_t(y) * width + x]; }
  bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  friend bool operator==(const Frame&, const Frame&) = default;
};

// Binary mask over a frame-sized grid.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), bits(std::size_t(w) * std::size_t(h), 0) {}

  bool at(int x, int y) const { return bits[std::size_t(y) * width + x] != 0; }
  void set(int x, int y, bool v = true) { bits[std::size_t(y) * width + x] = v ? 1 : 0; }
  int count() const {
    int n = 0;
    for (auto b : bits) n += b;
    return n;
  }

  friend bool operator==(const Mask&, const Mask&) = default;
};

}  // namespace modarc
