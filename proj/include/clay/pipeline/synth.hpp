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

#include "clay/layout/screen.hpp"

namespace clay::pipeline::synth {

/// Generator settings for the planted-signal corpus. Hierarchy coordinates
/// use the screen frame; the raster is drawn at a reduced size.
struct SynthOptions {
  int screen_width = 1440;
  int screen_height = 2560;
  int raster_width = 90;
  int raster_height = 160;
  int packages = 40;
  double invalid_per_screen = 2.5;  // mean planted invalid nodes
};

/// One screen. Every node carries its ground-truth label: a semantic type
/// for drawn objects, INVALID for planted nodes that do not match their
/// pixels.
Screen generate_screen(std::uint64_t seed, int index, const SynthOptions& opts = {});

/// `count` screens with source ids "synth_NNNNN" spread over opts.packages packages.
std::vector<Screen> generate_corpus(int count, std::uint64_t seed, const SynthOptions& opts = {});

/// Writes <source_id>.json and <source_id>.png per screen.
void write_corpus(const std::filesystem::path& dir, const std::vector<Screen>& screens);

}  // namespace clay::pipeline::synth
