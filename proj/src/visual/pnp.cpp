#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "mmslam/error.hpp"
#include "mmslam/visual/pose_estimation.hpp"

namespace mmslam::visual {

double reprojection_error(const Pose3& T, const Match3D2D& m, const CameraIntrinsics& intr) {
  const Vec3 p = T * m.landmark;
  if (!(p.z() > 1e-9)) return std::numeric_limits<double>::infinity();
  return (intr.project(p) - m.pixel).norm();
}

namespace {

std::vector<std::size_t> count_inliers(std::span<const Match3D2D> matches, const Pose3& T,
                                       const CameraIntrinsics& intr, double thresh) {
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < matches.size(); ++i)
    if (reprojection_error(T, matches[i], intr) < thresh) inliers.push_back(i);
  return inliers;
}

// Three distinct indices. Modulo draws keep the sequence identical across
// standard libraries, unlike std::uniform_int_distribution.
std::array<std::size_t, 3> sample3(std::mt19937_64& rng, std::size_t n) {
  std::array<std::size_t, 3> idx{};
  for (std::size_t k = 0; k < 3; ++k) {
    bool fresh = false;
    while (!fresh) {
      idx[k] = static_cast<std::size_t>(rng() % n);
      fresh = true;
      for (std::size_t j = 0; j < k; ++j)
        if (idx[j] == idx[k]) fresh = false;
    }
  }
  return idx;
}

}  // namespace

PnpResult ransac_pnp(std::span<const Match3D2D> matches, const CameraIntrinsics& intr,
                     const RansacConfig& cfg) {
  PnpResult result;
  if (matches.size() < 4) {
    result.status = PnpStatus::kInsufficientData;
    return result;
  }

  std::mt19937_64 rng(cfg.seed);
  bool found = false;
  for (int it = 0; it < cfg.iterations; ++it) {
    const auto idx = sample3(rng, matches.size());
    std::array<Vec3, 3> landmarks;
    std::array<Vec3, 3> rays;
    for (std::size_t k = 0; k < 3; ++k) {
      landmarks[k] = matches[idx[k]].landmark;
      rays[k] = intr.bearing(matches[idx[k]].pixel);
    }
    std::vector<Pose3> poses;
    try {
      poses = p3p_solve(landmarks, rays);
    } catch (const Error&) {
      continue;
    }
    for (const Pose3& T : poses) {
      auto inliers = count_inliers(matches, T, intr, cfg.reproj_thresh_px);
      if (!found || inliers.size() > result.inliers.size()) {
        found = true;
        result.pose = T;
        result.inliers = std::move(inliers);
      }
    }
    if (found && result.inliers.size() == matches.size()) break;
  }

  result.inlier_fraction =
      static_cast<double>(result.inliers.size()) / static_cast<double>(matches.size());
  result.status = (found && result.inlier_fraction >= cfg.min_inlier_frac) ? PnpStatus::kAccepted
                                                                           : PnpStatus::kLowInlierRatio;
  return result;
}

DepthCheck depth_consistency(std::span<const std::pair<Vec3, Vec3>> pairs, const Pose3& T,
                             double tol, double min_frac) {
  DepthCheck out;
  if (pairs.empty()) return out;
  const geom::Mat3 R = T.rotation_matrix();
  const double tz = T.translation().z();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Vec3& x0 = pairs[i].first;
    const double z1 = pairs[i].second.z();
    const double predicted = R(2, 0) * x0.x() + R(2, 1) * x0.y() + R(2, 2) * x0.z() + tz;
    if (std::abs(z1 - predicted) < tol) out.consistent.push_back(i);
  }
  out.fraction = static_cast<double>(out.consistent.size()) / static_cast<double>(pairs.size());
  out.pass = out.fraction >= min_frac;
  return out;
}

}  // namespace mmslam::visual
