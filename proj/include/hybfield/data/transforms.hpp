// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hybfield/data/camera.hpp"
#include "hybfield/data/image.hpp"
#include "hybfield/errors.hpp"

namespace hybfield {

// Cameras and image paths of one split in the NeRF-synthetic layout
// (transforms_<split>.json next to the image folders).
struct TransformsFile {
  double camera_angle_x = 0.0;
  std::vector<Camera> cameras;
  std::vector<std::string> image_paths;  // resolved, with extension
};

namespace detail {

inline std::string resolve_frame_path(const std::filesystem::path& dir, const std::string& file_path) {
  std::filesystem::path p = dir / file_path;
  if (!p.has_extension()) p += ".png";
  return p.lexically_normal().string();
}

}  // namespace detail

// Parses a transforms file. Image size is taken from "w"/"h" keys when
// present, then from `size_hint`, then from the header of the first image.
inline TransformsFile load_transforms(const std::string& path,
                                      std::optional<std::pair<int, int>> size_hint = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open transforms file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed transforms file '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw ParseError("transforms file '" + path + "' is not a JSON object");
  if (!j.contains("camera_angle_x")) throw MissingFieldError("transforms file '" + path + "': missing camera_angle_x");
  if (!j.contains("frames") || !j["frames"].is_array())
    throw MissingFieldError("transforms file '" + path + "': missing frames array");

  TransformsFile tf;
  const auto dir = std::filesystem::path(path).parent_path();
  try {
    tf.camera_angle_x = j["camera_angle_x"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("transforms file '" + path + "': camera_angle_x is not a number");
  }
  if (!(tf.camera_angle_x > 0.0 && tf.camera_angle_x < M_PI))
    throw ParseError("transforms file '" + path + "': camera_angle_x out of range");

  std::vector<Mat4> poses;
  int index = 0;
  for (const auto& frame : j["frames"]) {
    const std::string where = "transforms file '" + path + "', frame " + std::to_string(index++);
    if (!frame.contains("file_path")) throw MissingFieldError(where + ": missing file_path");
    if (!frame.contains("transform_matrix")) throw MissingFieldError(where + ": missing transform_matrix");
    Mat4 m{};
    try {
      const auto& tm = frame["transform_matrix"];
      if (!tm.is_array() || tm.size() != 4) throw ParseError(where + ": transform_matrix must be 4x4");
      for (std::size_t r = 0; r < 4; ++r) {
        if (!tm[r].is_array() || tm[r].size() != 4) throw ParseError(where + ": transform_matrix must be 4x4");
        for (std::size_t c = 0; c < 4; ++c) m[r][c] = tm[r][c].get<double>();
      }
      tf.image_paths.push_back(detail::resolve_frame_path(dir, frame["file_path"].get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (std::abs(det3(rotation_of(m))) < 1e-9) throw SingularMatrixError(where + ": transform_matrix is singular");
    poses.push_back(m);
  }

  int w = 0, h = 0;
  if (j.contains("w") && j.contains("h")) {
    w = j["w"].get<int>();
    h = j["h"].get<int>();
  } else if (size_hint) {
    std::tie(w, h) = *size_hint;
  } else if (!tf.image_paths.empty()) {
    std::tie(w, h) = read_png_size(tf.image_paths.front());
  }

  const double focal = w > 0 ? focal_from_fov(w, tf.camera_angle_x) : 0.0;
  for (const auto& m : poses) {
    Camera cam;
    cam.c2w = m;
    cam.width = w;
    cam.height = h;
    cam.fx = cam.fy = focal;
    cam.cx = 0.5 * w;
    cam.cy = 0.5 * h;
    tf.cameras.push_back(cam);
  }
  return tf;
}

// Writes cameras in the same layout; all cameras must share one horizontal FOV.
inline void save_transforms(const std::string& path, const std::vector<Camera>& cameras,
                            const std::vector<std::string>& file_paths) {
  if (cameras.empty()) throw ConfigError("save_transforms: no cameras");
  nlohmann::json j;
  const auto& c0 = cameras.front();
  j["camera_angle_x"] = 2.0 * std::atan(0.5 * c0.width / c0.fx);
  j["w"] = c0.width;
  j["h"] = c0.height;
  j["frames"] = nlohmann::json::array();
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    nlohmann::json f;
    f["file_path"] = file_paths.at(i);
    nlohmann::json m = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < 4; ++c) row.push_back(cameras[i].c2w[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
      m.push_back(row);
    }
    f["transform_matrix"] = m;
    j["frames"].push_back(f);
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write transforms file '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace hybfield
