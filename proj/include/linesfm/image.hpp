#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "linesfm/common.hpp"

namespace linesfm {

// Row-major raster. Pixel (x, y) has its center at integer coordinates.
template <typename T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool InBounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

using GrayImage = Raster<std::uint8_t>;
using FloatImage = Raster<float>;

GrayImage ReadPgm(const std::filesystem::path& path);
void WritePgm(const std::filesystem::path& path, const GrayImage& image);

// Portable float map, single channel, little-endian (negative scale), rows
// stored bottom-to-top per the format.
FloatImage ReadPfm(const std::filesystem::path& path);
void WritePfm(const std::filesystem::path& path, const FloatImage& image);

}  // namespace linesfm
