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

#include <string>

#include "clay/image/image.hpp"
#include "clay/layout/hierarchy.hpp"

namespace clay {

/// A screenshot paired with its layout tree. Bounds live in the hierarchy's
/// declared screen frame; `to_raster` maps them onto screenshot pixels.
struct Screen {
  ViewHierarchy hierarchy;
  Image screenshot;
  std::string source_id;

  double scale_x() const { return double(screenshot.width) / hierarchy.screen_width; }
  double scale_y() const { return double(screenshot.height) / hierarchy.screen_height; }
  BoundingBox to_raster(const BoundingBox& b) const {
    return intersect(scale_box(b, scale_x(), scale_y()), screenshot.rect());
  }
};

}  // namespace clay
