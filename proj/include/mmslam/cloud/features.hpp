#pragma once

#include <cstddef>
#include <vector>

#include "mmslam/cloud/kdtree.hpp"
#include "mmslam/cloud/point_cloud.hpp"

namespace mmslam::cloud {

struct NormalEstimate {
  PointCloud cloud;                // input points with unit normals filled in
  std::vector<double> curvature;   // lambda0 / (lambda0 + lambda1 + lambda2)
  std::vector<bool> valid;         // false when the neighborhood had < 3 points
};

// PCA normals over a fixed radius. Normals are flipped toward `view_dir`;
// invalid points get curvature 0 and the view direction as placeholder normal.
// Throws Error(kEmptyInput) on an empty cloud.
NormalEstimate estimate_normals_curvature(const PointCloud& cloud, double radius,
                                          const Vec3& view_dir = Vec3::UnitZ());
NormalEstimate estimate_normals_curvature(const PointCloud& cloud, const KdTree& index,
                                          double radius, const Vec3& view_dir = Vec3::UnitZ());

struct KeypointSampling {
  double quantile = 0.9;       // curvature must exceed this quantile
  double min_curvature = 0.0;  // and this absolute floor
  double min_spacing = 0.5;    // m
};

// Indices of high-curvature seeds, greedily thinned by min_spacing with the
// highest curvature kept first.
std::vector<std::size_t> sample_keypoints(const PointCloud& cloud,
                                          const std::vector<double>& curvature,
                                          const KeypointSampling& cfg);

}  // namespace mmslam::cloud
