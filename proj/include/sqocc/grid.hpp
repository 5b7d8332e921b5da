/* Copyright 2026 The sqocc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// Regular voxel grids: geometry, dense accumulation fields and label grids.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqocc/superquadric.hpp"

namespace sqocc {

using Index3 = std::array<std::int64_t, 3>;

// Axis-aligned grid of cubic voxels. Linear index is x-fastest.
struct VoxelGridSpec {
  Vec3 origin = Vec3::Zero();  // minimum corner
  std::array<int, 3> dims{1, 1, 1};
  double resolution = 0.4;

  // The Occ3D-nuScenes grid: [-40, 40] x [-40, 40] x [-1, 5.4] at 0.4 m.
  static VoxelGridSpec occ3d() {
    VoxelGridSpec s;
    s.origin = Vec3(-40.0, -40.0, -1.0);
    s.dims = {200, 200, 16};
    s.resolution = 0.4;
    return s;
  }

  void validate() const {
    if (!(resolution > 0.0) || !std::isfinite(resolution)) throw std::invalid_argument("grid: resolution must be > 0");
    if (!origin.allFinite()) throw std::invalid_argument("grid: non-finite origin");
    for (int d : dims)
      if (d < 1) throw std::invalid_argument("grid: dims must be >= 1");
  }

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(dims[2]);
  }

  std::size_t linear(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * z);
  }

  double center_coord(int axis, std::int64_t i) const {
    return origin[axis] + (static_cast<double>(i) + 0.5) * resolution;
  }

  Vec3 center(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return {center_coord(0, x), center_coord(1, y), center_coord(2, z)};
  }

  // Voxel containing p (may lie outside the grid).
  Index3 voxel_of(const Vec3& p) const {
    Index3 out;
    for (int a = 0; a < 3; ++a) out[a] = static_cast<std::int64_t>(std::floor((p[a] - origin[a]) / resolution));
    return out;
  }

  bool contains(const Index3& v) const {
    for (int a = 0; a < 3; ++a)
      if (v[a] < 0 || v[a] >= dims[a]) return false;
    return true;
  }

  Vec3 max_corner() const {
    return origin + resolution * Vec3(dims[0], dims[1], dims[2]);
  }

  bool same_geometry(const VoxelGridSpec& o) const {
    return dims == o.dims && origin == o.origin && resolution == o.resolution;
  }
};

// Occupancy weight per voxel plus a class-weight vector per voxel.
struct DenseGrids {
  VoxelGridSpec spec;
  std::size_t num_classes = 0;
  std::vector<double> v_o;  // voxel_count
  std::vector<double> v_c;  // voxel_count * num_classes, class-fastest

  DenseGrids() = default;
  DenseGrids(const VoxelGridSpec& s, std::size_t classes)
      : spec(s), num_classes(classes), v_o(s.voxel_count(), 0.0), v_c(s.voxel_count() * classes, 0.0) {}

  DenseGrids& operator+=(const DenseGrids& o) {
    if (!spec.same_geometry(o.spec) || num_classes != o.num_classes)
      throw std::invalid_argument("dense grids: shape mismatch");
    for (std::size_t i = 0; i < v_o.size(); ++i) v_o[i] += o.v_o[i];
    for (std::size_t i = 0; i < v_c.size(); ++i) v_c[i] += o.v_c[i];
    return *this;
  }
};

struct SemanticGrid {
  VoxelGridSpec spec;
  ClassTable classes;
  std::vector<Label> labels;  // voxel_count, x-fastest

  bool occupied(std::size_t i) const { return labels[i] != classes.free_index; }
};

}  // namespace sqocc
