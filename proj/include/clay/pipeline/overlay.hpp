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

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>

#include "clay/pipeline/pipeline.hpp"

namespace clay::pipeline {

using Rgb = std::array<std::uint8_t, 3>;

/// Fixed color for a type name, derived from a hash of the name.
Rgb type_color(std::string_view name);

struct OverlayOptions {
  int thickness = 2;
  bool draw_removed = false;  // dashed grey outlines at the original boxes
};

/// Screenshot with survivor outlines colored by type and a legend column on
/// the right listing the types present.
Image render_overlay(const Screen& s, const CleanedScreen& c, const OverlayOptions& opts = {});

/// 5x7 glyph rows for A-Z, 0-9 and '_'; other characters are blank.
std::array<std::uint8_t, 7> glyph(char ch);

/// Legend width in pixels for the overlay of `c`.
int legend_width(const CleanedScreen& c, const OverlayOptions& opts = {});

}  // namespace clay::pipeline
