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

#include "clay/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "clay/error.hpp"

namespace clay::nn {

namespace {

constexpr char kMagic[8] = {'C', 'L', 'A', 'Y', 'C', 'K', 'P', 'T'};

template <typename T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw DataError("checkpoint: truncated header");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

void write_float(std::ostream& os, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  write_le(os, bits);
}

nlohmann::json read_manifest(std::ifstream& in, const std::filesystem::path& path) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("checkpoint: bad magic in " + path.string());
  const auto version = read_le<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version) + " in " + path.string());
  const auto len = read_le<std::uint64_t>(in);
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw DataError("checkpoint: truncated manifest");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: manifest is not JSON: ") + e.what());
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params, const nlohmann::json& meta) {
  nlohmann::json manifest;
  manifest["version"] = kCheckpointVersion;
  manifest["meta"] = meta.is_null() ? nlohmann::json::object() : meta;
  manifest["tensors"] = nlohmann::json::array();
  Index offset = 0;
  for (const auto& p : params) {
    manifest["tensors"].push_back({{"name", p.name}, {"shape", {p.value.rows(), p.value.cols()}}, {"offset", offset}});
    offset += p.value.size();
  }
  const std::string text = manifest.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("checkpoint: cannot write " + path.string());
  os.write(kMagic, 8);
  write_le(os, kCheckpointVersion);
  write_le(os, static_cast<std::uint64_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : params)
    for (Index i = 0; i < p.value.size(); ++i) write_float(os, static_cast<float>(p.value.data()[i]));
  if (!os) throw DataError("checkpoint: write failed for " + path.string());
}

nlohmann::json read_checkpoint_meta(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  return read_manifest(in, path).value("meta", nlohmann::json::object());
}

nlohmann::json load_checkpoint(const std::filesystem::path& path, ParameterSet& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  const nlohmann::json manifest = read_manifest(in, path);
  const auto data_start = in.tellg();
  for (auto& p : params) {
    const nlohmann::json* entry = nullptr;
    for (const auto& t : manifest.at("tensors"))
      if (t.at("name") == p.name) entry = &t;
    if (entry == nullptr) throw DataError("checkpoint: missing tensor '" + p.name + "'");
    const Index rows = (*entry)["shape"][0], cols = (*entry)["shape"][1];
    if (rows != p.value.rows() || cols != p.value.cols())
      throw DataError("checkpoint: tensor '" + p.name + "' has shape [" + std::to_string(rows) + "x" +
                      std::to_string(cols) + "], model expects " + shape_str(p.value));
    const Index offset = (*entry)["offset"];
    in.seekg(data_start + std::streamoff(offset * 4));
    for (Index i = 0; i < p.value.size(); ++i) {
      const auto bits = read_le<std::uint32_t>(in);
      float f;
      std::memcpy(&f, &bits, sizeof f);
      p.value.data()[i] = f;
    }
  }
  params.zero_grad();
  return manifest.value("meta", nlohmann::json::object());
}

}  // namespace clay::nn
