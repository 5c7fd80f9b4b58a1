#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mmslam/visual/types.hpp"

namespace mmslam::visual {

// All camera poses T (landmark frame -> camera frame) such that each
// T * landmarks[i] lies on bearings[i]. Bearings must be unit vectors.
// Throws Error(kDegenerate) for collinear landmarks.
std::vector<Pose3> p3p_solve(const std::array<Vec3, 3>& landmarks,
                             const std::array<Vec3, 3>& bearings);

struct Match3D2D {
  Vec3 landmark;  // in the k0 camera frame
  Vec2 pixel;     // observed in k1
};

struct RansacConfig {
  int iterations = 500;
  double reproj_thresh_px = 3.0;
  double min_inlier_frac = 0.6;
  std::uint64_t seed = 0;
};

enum class PnpStatus { kAccepted, kInsufficientData, kLowInlierRatio };

struct PnpResult {
  PnpStatus status = PnpStatus::kInsufficientData;
  Pose3 pose;                       // T_{k0}^{k1}
  std::vector<std::size_t> inliers;
  double inlier_fraction = 0.0;
};

// Reprojection error in pixels; infinity when the point is not in front.
double reprojection_error(const Pose3& T, const Match3D2D& m, const CameraIntrinsics& intr);

// P3P inside RANSAC. Fewer than 4 matches -> kInsufficientData; fewer than
// min_inlier_frac inliers -> kLowInlierRatio. Deterministic for a fixed seed.
PnpResult ransac_pnp(std::span<const Match3D2D> matches, const CameraIntrinsics& intr,
                     const RansacConfig& cfg);

struct DepthCheck {
  bool pass = false;
  double fraction = 0.0;
  std::vector<std::size_t> consistent;  // indices into the input pairs
};

// Pairs (X in k0, X in k1) whose k1 depth agrees with the z row of T applied
// to the k0 landmark within tol; pass iff the consistent fraction >= min_frac.
DepthCheck depth_consistency(std::span<const std::pair<Vec3, Vec3>> pairs, const Pose3& T,
                             double tol = 0.1, double min_frac = 0.75);

struct RefineConfig {
  double cauchy_scale = 1.0;  // px
  double pixel_sigma = 1.0;   // px, scales the returned covariance
  int max_iters = 50;
  double step_tol = 1e-8;
  std::size_t min_pairs = 6;
};

struct RefineResult {
  bool ok = false;
  geom::PoseWithCov pose;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<double> cost_history;  // robust cost after each accepted iteration
};

// Residual pi(T X) - x for one pair.
Vec2 reprojection_residual(const Pose3& T, const Match3D2D& m, const CameraIntrinsics& intr);
// d residual / d xi for the perturbation T (+) xi.
Eigen::Matrix<double, 2, 6> reprojection_jacobian(const Pose3& T, const Match3D2D& m,
                                                  const CameraIntrinsics& intr);

// Cauchy loss rho(r) = c^2/2 * ln(1 + r^2/c^2) on the pixel residual norm.
double cauchy_rho(double r, double c);

// Gauss-Newton on sum rho(|r_j|) with IRLS weights; the covariance is
// sigma^2 times the inverse of the weighted Gauss-Newton Hessian at the
// optimum. ok == false for too few pairs or a rank-deficient Hessian.
RefineResult refine_pose_gn(std::span<const Match3D2D> pairs, const CameraIntrinsics& intr,
                            const Pose3& init, const RefineConfig& cfg = {});

}  // namespace mmslam::visual
