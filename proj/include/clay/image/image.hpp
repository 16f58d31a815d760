/*
 * Copyright 2026 The clay Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "clay/layout/geometry.hpp"

namespace clay {

/// 8-bit RGB raster, row-major, interleaved channels.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0) : width(w), height(h), pixels(std::size_t(w) * h * 3, fill) {}

  bool empty() const { return width <= 0 || height <= 0; }
  std::uint8_t& at(int x, int y, int c) { return pixels[(std::size_t(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return pixels[(std::size_t(y) * width + x) * 3 + c]; }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = &pixels[(std::size_t(y) * width + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
  BoundingBox rect() const { return {0, 0, width, height}; }
  bool operator==(const Image&) const = default;
};

/// Reads a PNG or JPEG file as RGB.
Image read_image(const std::filesystem::path& path);

/// Writes an RGB PNG. Output bytes depend only on the pixels.
void write_png(const std::filesystem::path& path, const Image& image);

/// Bilinear resample of `region` (raster coordinates, clipped to the image)
/// to out_h x out_w. Returns [out_h*out_w, 3] with values scaled to [0, 1].
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> resize_bilinear(const Image& image,
                                                                                      const BoundingBox& region,
                                                                                      int out_h, int out_w);

template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> resize_bilinear(const Image& image, int out_h,
                                                                                      int out_w) {
  return resize_bilinear<Scalar>(image, image.rect(), out_h, out_w);
}

extern template Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> resize_bilinear<double>(
    const Image&, const BoundingBox&, int, int);
extern template Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> resize_bilinear<float>(
    const Image&, const BoundingBox&, int, int);

}  // namespace clay
