#pragma once

#include <cstddef>
#include <vector>

#include "mmslam/geom/pose.hpp"

namespace mmslam::cloud {

using geom::Mat3;
using geom::Pose3;
using geom::Vec3;

// Parallel arrays; `colors` and `normals` are either empty or the same
// length as `points`. Colors are RGB in [0, 1].
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> colors;
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_colors() const { return !colors.empty(); }
  bool has_normals() const { return !normals.empty(); }

  // Throws Error(kInvalidArgument) on length mismatch or non-unit normals.
  void validate() const;
  void append(const PointCloud& other);
};

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  double volume() const;
};

PointCloud transform(const PointCloud& cloud, const Pose3& T);

// Centroid of each occupied voxel; output ordered by voxel index so the
// result is independent of input order.
PointCloud voxel_downsample(const PointCloud& cloud, double leaf);

Aabb bounds(const PointCloud& cloud);
Vec3 centroid(const PointCloud& cloud);

}  // namespace mmslam::cloud
