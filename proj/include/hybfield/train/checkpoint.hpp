// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "hybfield/config.hpp"
#include "hybfield/errors.hpp"
#include "hybfield/model.hpp"
#include "hybfield/train/adam.hpp"

namespace hybfield {

// File layout:
//   8 bytes   magic "HYBCKPT\n"
//   8 bytes   manifest length n (uint64, little-endian)
//   n bytes   manifest, UTF-8 JSON
//   blob      parameters, then Adam m, then Adam v, each as the tensors listed
//             in the manifest in order; IEEE-754 little-endian of `dtype`.
//
// The manifest records the format version, the full run config, dtype, Adam
// step, the layout tags (triu order, positional-encoding order) and every
// tensor's name and element count.
inline constexpr int kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'H', 'Y', 'B', 'C', 'K', 'P', 'T', '\n'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class S>
constexpr const char* dtype_name() {
  return std::is_same_v<S, double> ? "float64" : "float32";
}

template <class S>
struct Checkpoint {
  RunConfig config;
  FieldParams<S> params;
  AdamState<S> adam;
};

template <class S>
nlohmann::json checkpoint_manifest(const RunConfig& config, FieldParams<S>& params, const AdamState<S>& adam) {
  nlohmann::json m;
  m["format"] = "hybfield-checkpoint";
  m["version"] = kCheckpointVersion;
  m["dtype"] = dtype_name<S>();
  m["adam_step"] = adam.step;
  m["config"] = to_json(config);
  m["layout"] = {{"cov_triu", "row-major [S00,S01,S02,S11,S12,S22]"},
                 {"fixed_pe", "frequency-major, sin-then-cos, component-minor"},
                 {"matrices", "row-major out x in"},
                 {"blob", "params, adam.m, adam.v"}};
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : params.tensors()) tensors.push_back({{"name", t.name}, {"count", t.data.size()}});
  m["tensors"] = tensors;
  return m;
}

template <class S>
void save_checkpoint(const std::string& path, const RunConfig& config, FieldParams<S>& params, AdamState<S>& adam) {
  const std::string manifest = checkpoint_manifest(config, params, adam).dump(2);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
  out.write(kCheckpointMagic, 8);
  const std::uint64_t n = manifest.size();
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(manifest.data(), static_cast<std::streamsize>(n));
  for (FieldParams<S>* p : {&params, &adam.m, &adam.v})
    for (const auto& t : p->tensors())
      out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size_bytes()));
  if (!out) throw CheckpointError("write failure on checkpoint '" + path + "'");
}

// Reads only the manifest.
inline nlohmann::json read_checkpoint_manifest(const std::string& path, std::uint64_t* blob_offset = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8)) throw CheckpointTruncatedError("checkpoint '" + path + "' is truncated (header)");
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0) throw CheckpointError("'" + path + "' is not a checkpoint");
  std::uint64_t n = 0;
  if (!in.read(reinterpret_cast<char*>(&n), 8)) throw CheckpointTruncatedError("checkpoint '" + path + "' is truncated (header)");
  std::string text(n, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(n)))
    throw CheckpointTruncatedError("checkpoint '" + path + "' is truncated (manifest)");
  if (blob_offset) *blob_offset = 16 + n;
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint '" + path + "' has a malformed manifest: " + e.what());
  }
}

// Loads and validates a checkpoint. Version, dimension and truncation
// problems raise distinct error types; nothing is returned on failure.
template <class S>
Checkpoint<S> load_checkpoint(const std::string& path) {
  std::uint64_t offset = 0;
  const nlohmann::json m = read_checkpoint_manifest(path, &offset);
  if (!m.contains("version") || !m["version"].is_number_integer() || m["version"].get<int>() != kCheckpointVersion)
    throw CheckpointVersionError("checkpoint '" + path + "': unsupported format version (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  if (m.value("dtype", "") != dtype_name<S>())
    throw CheckpointDimensionError("checkpoint '" + path + "': dtype is " + m.value("dtype", "?") + ", expected " +
                                   dtype_name<S>());

  Checkpoint<S> ck;
  try {
    ck.config = config_from_json(m.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("checkpoint '" + path + "': missing config");
  } catch (const ConfigError& e) {
    throw CheckpointDimensionError("checkpoint '" + path + "': invalid config: " + e.what());
  }
  ck.params = FieldParams<S>(ck.config.model);
  ck.adam = AdamState<S>(ck.config.model);
  ck.adam.step = m.value("adam_step", std::uint64_t{0});

  auto tensors = ck.params.tensors();
  const auto& listed = m.at("tensors");
  if (!listed.is_array() || listed.size() != tensors.size())
    throw CheckpointDimensionError("checkpoint '" + path + "': tensor count does not match the config");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (listed[i].value("name", "") != tensors[i].name ||
        listed[i].value("count", std::uint64_t{0}) != tensors[i].data.size())
      throw CheckpointDimensionError("checkpoint '" + path + "': tensor " + tensors[i].name + " expected " +
                                     std::to_string(tensors[i].data.size()) + " entries, manifest lists " +
                                     listed[i].dump());
  }

  std::ifstream in(path, std::ios::binary);
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  const std::uint64_t expected = offset + 3 * ck.params.size() * sizeof(S);
  if (file_size < expected)
    throw CheckpointTruncatedError("checkpoint '" + path + "' is truncated: " + std::to_string(file_size) + " of " +
                                   std::to_string(expected) + " bytes");
  if (file_size > expected) throw CheckpointDimensionError("checkpoint '" + path + "' has trailing bytes");
  in.seekg(static_cast<std::streamoff>(offset));
  for (FieldParams<S>* p : {&ck.params, &ck.adam.m, &ck.adam.v})
    for (auto& t : p->tensors())
      if (!in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size_bytes())))
        throw CheckpointTruncatedError("checkpoint '" + path + "' is truncated (blob)");
  return ck;
}

}  // namespace hybfield
