// Copyright 2026 The hybfield Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>

#include "hybfield/math.hpp"

namespace hybfield {

// Pinhole camera, OpenGL convention: the camera looks along its local -z with
// +y up. `c2w` maps camera to world coordinates.
struct Camera {
  Mat4 c2w = identity4();
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  void validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("camera: focal lengths must be positive");
    if (width < 1 || height < 1) throw std::invalid_argument("camera: image size must be positive");
    const Mat3 r = rotation_of(c2w);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double d = 0.0;
        for (int k = 0; k < 3; ++k) d += r[k][i] * r[k][j];
        if (std::abs(d - (i == j ? 1.0 : 0.0)) > 1e-4)
          throw std::invalid_argument("camera: rotation block is not orthonormal");
      }
  }

  Vec3<double> position() const { return translation_of(c2w); }
};

// Focal length in pixels from a horizontal field of view.
inline double focal_from_fov(int width, double camera_angle_x) {
  return 0.5 * static_cast<double>(width) / std::tan(0.5 * camera_angle_x);
}

// Camera at `eye` looking at `target`, with `up` as the approximate up vector.
inline Camera look_at(const Vec3<double>& eye, const Vec3<double>& target, const Vec3<double>& up, int width,
                      int height, double camera_angle_x) {
  const Vec3<double> back = normalized(eye - target);  // camera +z
  Vec3<double> right{up[1] * back[2] - up[2] * back[1], up[2] * back[0] - up[0] * back[2],
                     up[0] * back[1] - up[1] * back[0]};
  right = normalized(right);
  const Vec3<double> cam_up{back[1] * right[2] - back[2] * right[1], back[2] * right[0] - back[0] * right[2],
                            back[0] * right[1] - back[1] * right[0]};
  Camera cam;
  for (int i = 0; i < 3; ++i) {
    cam.c2w[static_cast<std::size_t>(i)][0] = right[static_cast<std::size_t>(i)];
    cam.c2w[static_cast<std::size_t>(i)][1] = cam_up[static_cast<std::size_t>(i)];
    cam.c2w[static_cast<std::size_t>(i)][2] = back[static_cast<std::size_t>(i)];
    cam.c2w[static_cast<std::size_t>(i)][3] = eye[static_cast<std::size_t>(i)];
  }
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = focal_from_fov(width, camera_angle_x);
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  return cam;
}

}  // namespace hybfield
