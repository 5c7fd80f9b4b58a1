#pragma once

#include <vector>

#include "mmslam/cloud/kdtree.hpp"
#include "mmslam/cloud/point_cloud.hpp"

namespace mmslam::cloud {

struct IcpConfig {
  double max_corr_dist = 0.3;  // m
  int max_iters = 50;
  double rms_tol = 1e-6;       // m
  std::size_t max_source_points = 0;  // 0 keeps all; otherwise strided subsample
};

struct IcpResult {
  Pose3 transform;    // maps source coordinates into target coordinates
  double fitness = 0.0;  // fraction of source points with a partner within max_corr_dist
  double rms = 0.0;
  int iterations = 0;
  // Truncated RMS sqrt(mean(min(d^2, max_corr_dist^2))) before the first and
  // after every iteration. Non-increasing by construction.
  std::vector<double> rms_history;
};

// Point-to-point ICP. Throws Error(kNoOverlap) when no source point has a
// partner within max_corr_dist at the initial pose.
IcpResult icp_refine(const PointCloud& source, const PointCloud& target, const Pose3& init,
                     const IcpConfig& cfg);
IcpResult icp_refine(const PointCloud& source, const PointCloud& target, const KdTree& target_index,
                     const Pose3& init, const IcpConfig& cfg);

}  // namespace mmslam::cloud
