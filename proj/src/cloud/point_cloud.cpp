#include "mmslam/cloud/point_cloud.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "mmslam/error.hpp"

namespace mmslam::cloud {

void PointCloud::validate() const {
  if (has_colors() && colors.size() != points.size())
    throw Error(ErrorCode::kInvalidArgument, "point cloud: colors length mismatch");
  if (has_normals() && normals.size() != points.size())
    throw Error(ErrorCode::kInvalidArgument, "point cloud: normals length mismatch");
  for (const auto& n : normals) {
    if (std::abs(n.norm() - 1.0) > 1e-6)
      throw Error(ErrorCode::kInvalidArgument, "point cloud: normal is not unit length");
  }
}

void PointCloud::append(const PointCloud& other) {
  if (!empty() && has_colors() != other.has_colors())
    throw Error(ErrorCode::kInvalidArgument, "point cloud: cannot mix colored and plain clouds");
  const bool keep_normals = (empty() || has_normals()) && other.has_normals();
  if (!keep_normals) normals.clear();
  points.insert(points.end(), other.points.begin(), other.points.end());
  colors.insert(colors.end(), other.colors.begin(), other.colors.end());
  if (keep_normals) normals.insert(normals.end(), other.normals.begin(), other.normals.end());
}

double Aabb::volume() const {
  const Vec3 e = (max - min).cwiseMax(0.0);
  return e.x() * e.y() * e.z();
}

PointCloud transform(const PointCloud& cloud, const Pose3& T) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(T * p);
  out.colors = cloud.colors;
  if (cloud.has_normals()) {
    const Mat3 R = T.rotation_matrix();
    out.normals.reserve(cloud.size());
    for (const auto& n : cloud.normals) out.normals.push_back(R * n);
  }
  return out;
}

PointCloud voxel_downsample(const PointCloud& cloud, double leaf) {
  if (leaf <= 0.0) throw Error(ErrorCode::kInvalidArgument, "voxel_downsample: leaf must be > 0");
  struct Acc {
    Vec3 sum = Vec3::Zero();
    Vec3 color = Vec3::Zero();
    std::size_t n = 0;
  };
  std::map<std::array<long long, 3>, Acc> voxels;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const std::array<long long, 3> key{static_cast<long long>(std::floor(p.x() / leaf)),
                                       static_cast<long long>(std::floor(p.y() / leaf)),
                                       static_cast<long long>(std::floor(p.z() / leaf))};
    Acc& a = voxels[key];
    a.sum += p;
    if (cloud.has_colors()) a.color += cloud.colors[i];
    ++a.n;
  }
  PointCloud out;
  out.points.reserve(voxels.size());
  for (const auto& [key, a] : voxels) {
    const double n = static_cast<double>(a.n);
    out.points.push_back(a.sum / n);
    if (cloud.has_colors()) out.colors.push_back(a.color / n);
  }
  return out;
}

Aabb bounds(const PointCloud& cloud) {
  Aabb box;
  if (cloud.empty()) return box;
  box.min = box.max = cloud.points.front();
  for (const auto& p : cloud.points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

Vec3 centroid(const PointCloud& cloud) {
  Vec3 c = Vec3::Zero();
  if (cloud.empty()) return c;
  for (const auto& p : cloud.points) c += p;
  return c / static_cast<double>(cloud.size());
}

}  // namespace mmslam::cloud
