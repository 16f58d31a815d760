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

#include <filesystem>

#include <nlohmann/json.hpp>

#include "clay/nn/tape.hpp"

namespace clay::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Writes every parameter as float32 behind a JSON manifest.
///
/// Layout: the 8 bytes "CLAYCKPT", a little-endian u32 format version, a u64
/// manifest length, the manifest (UTF-8 JSON), then the concatenated float32
/// data. The manifest lists {name, shape, offset} per tensor, with offset in
/// floats from the start of the data block, plus caller metadata under "meta".
void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params, const nlohmann::json& meta = {});

/// Reads the manifest's "meta" object without touching tensor data.
nlohmann::json read_checkpoint_meta(const std::filesystem::path& path);

/// Loads tensors into `params` by name. Every parameter must be present with
/// a matching shape. Returns the stored metadata.
nlohmann::json load_checkpoint(const std::filesystem::path& path, ParameterSet& params);

}  // namespace clay::nn
