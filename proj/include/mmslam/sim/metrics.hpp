#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "mmslam/io/formats.hpp"

namespace mmslam::sim {

struct Metrics {
  double rmse_pos = 0.0;    // m
  double rmse_z = 0.0;      // m
  double rmse_angle = 0.0;  // deg
  std::size_t count = 0;    // evaluated poses
  std::size_t n_matches = 0;
};

// Per-submap errors T_err = T_gt * T_est^-1, paired by id. Position error is
// |t_err|, the z error |t_err.z|, the angle the rotation angle of R_err.
// Throws Error(kIdMismatch) if the id sets differ or are empty.
Metrics evaluate_submaps(const std::map<std::uint64_t, geom::Pose3>& est,
                         const std::map<std::uint64_t, geom::Pose3>& gt);

struct StampedPosition {
  double t = 0.0;
  geom::Vec3 position = geom::Vec3::Zero();
};

// Nearest-timestamp association within `window` seconds, Horn alignment of
// the estimate onto the reference (first correspondence pinned), then the
// position RMSE. Throws Error(kPrecondition) with fewer than 3 correspondences.
Metrics evaluate_dgps(const std::vector<io::StampedPose>& est, const std::vector<StampedPosition>& gt,
                      double window = 0.05);

}  // namespace mmslam::sim
