#pragma once

#include <vector>

#include <Eigen/Core>

#include "mmslam/cloud/kdtree.hpp"
#include "mmslam/cloud/point_cloud.hpp"

namespace mmslam::cloud {

// Simplified (C)SHOT: hard-binned histograms of normal-angle cosines over an
// azimuth x elevation x radial grid in the local reference frame, optionally
// followed by per-cell color histograms.
struct ShotConfig {
  double radius = 0.6;
  int azimuth_bins = 8;
  int elevation_bins = 2;
  int radial_bins = 2;
  int cosine_bins = 10;
  bool use_color = false;
  int color_bins = 15;  // per channel
  std::size_t min_support = 5;

  void validate() const;
  int spatial_cells() const { return azimuth_bins * elevation_bins * radial_bins; }
  int dimension() const;
};

struct Keypoint3D {
  Vec3 position = Vec3::Zero();
  Mat3 lrf = Mat3::Identity();  // columns are the local x, y, z axes
  Eigen::VectorXd descriptor;
  bool usable = false;
};

// Local reference frame from the radius-weighted neighborhood covariance,
// with x and z signs chosen so most neighbors lie on their positive side.
Mat3 local_reference_frame(const PointCloud& cloud, const std::vector<KdTree::Neighbor>& nbrs,
                           const Vec3& center, double radius);

// `cloud` must carry normals; `index` is a 3D tree over cloud.points.
Keypoint3D compute_descriptor(const PointCloud& cloud, const KdTree& index,
                              const Vec3& position, const ShotConfig& cfg);

std::vector<Keypoint3D> compute_descriptors(const PointCloud& cloud, const KdTree& index,
                                            const std::vector<Vec3>& positions,
                                            const ShotConfig& cfg);

}  // namespace mmslam::cloud
