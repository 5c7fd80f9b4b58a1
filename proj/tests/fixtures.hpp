#pragma once

#include <numbers>
#include <utility>
#include <vector>

#include "mmslam/geom/pose.hpp"

namespace fixtures {

using mmslam::geom::Pose3;
using mmslam::geom::Vec3;

// Global score gate: scores fed to the tracker, the candidate score, and the
// accept decision worked out by hand from 0.6 (s_max - s_min) + s_min < s.
struct ScoreGateCase {
  std::vector<double> observed;
  double score;
  bool accept;
};

inline std::vector<ScoreGateCase> score_gate_cases() {
  return {
      {{0.0, 1.0}, 0.7, true},          // threshold 0.6
      {{0.0, 1.0}, 0.6, false},         // equal is not enough
      {{0.0, 1.0}, 0.59, false},
      {{0.2, 0.7}, 0.55, true},         // threshold 0.5
      {{0.2, 0.7}, 0.45, false},
      {{}, 1.0, false},                 // nothing observed yet
      {{0.4}, 0.4, false},              // threshold 0.4
      {{0.4}, 0.41, true},
      {{0.1, 0.3, 0.9}, 0.6, true},     // threshold 0.58
      {{0.1, 0.3, 0.9}, 0.5, false},
  };
}

// Depth consistency: |z1 - (R X0 + t)_z| < 0.1 for at least 75% of pairs.
struct DepthCase {
  std::vector<std::pair<Vec3, Vec3>> pairs;
  Pose3 T;
  bool pass;
};

inline std::vector<DepthCase> depth_cases() {
  const Pose3 up(mmslam::geom::Quat::Identity(), Vec3(0, 0, 0.5));
  // 90 deg about x maps y onto z.
  const Pose3 rx(mmslam::geom::Quat(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitX())), Vec3::Zero());
  const auto shifted = [](double z0, double dz) { return std::pair{Vec3(0.1, 0.2, z0), Vec3(0.1, 0.2, z0 + 0.5 + dz)}; };
  return {
      {{shifted(1, 0), shifted(2, 0), shifted(3, 0), shifted(4, 0)}, up, true},
      {{shifted(1, 0), shifted(2, 0), shifted(3, 0), shifted(4, 0.2)}, up, true},        // 3 of 4
      {{shifted(1, 0), shifted(2, 0), shifted(3, -0.2), shifted(4, 0.2)}, up, false},    // 2 of 4
      {{shifted(1, 0.09), shifted(2, -0.09), shifted(3, 0.09), shifted(4, -0.09)}, up, true},
      {{shifted(1, 0.11), shifted(2, -0.11), shifted(3, 0.11), shifted(4, -0.11)}, up, false},
      {{{Vec3(0, 2, 0), Vec3(0, 0, 2.05)}, {Vec3(1, 3, 1), Vec3(1, -1, 3.0)}, {Vec3(0, 4, 5), Vec3(0, -5, 3.95)},
        {Vec3(2, 1, 0), Vec3(2, 0, 1.0)}},
       rx, true},
      {{{Vec3(0, 2, 0), Vec3(0, 2, 0)}, {Vec3(1, 3, 1), Vec3(1, 3, 1)}, {Vec3(0, 4, 5), Vec3(0, 4, 5)},
        {Vec3(2, 1, 0), Vec3(2, 1, 0)}},
       rx, false},
      // Only depth is compared; x and y may disagree.
      {{{Vec3(0, 0, 2), Vec3(5, -3, 2.5)}, {Vec3(1, 1, 3), Vec3(-4, 7, 3.5)}, {Vec3(2, 0, 1), Vec3(0, 0, 1.5)},
        {Vec3(0, 2, 4), Vec3(9, 9, 4.5)}},
       up, true},
      {{}, up, false},
      {{shifted(1, 0), shifted(2, 0), shifted(3, 0), shifted(4, 0), shifted(5, 0), shifted(6, 0.5),
        shifted(7, 0.5), shifted(8, 0.5)},
       up, false},  // 5 of 8
  };
}

}  // namespace fixtures
