#pragma once

#include <numbers>

#include "mmslam/geom/pose.hpp"
#include "mmslam/sim/random.hpp"

namespace testing {

using namespace mmslam;

inline geom::Vec3 random_vec(sim::Rng& rng, double scale = 1.0) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

inline geom::Vec3 random_unit(sim::Rng& rng) {
  geom::Vec3 v(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

// Uniform rotation via a normalized Gaussian quaternion.
inline geom::Quat random_rotation(sim::Rng& rng) {
  geom::Quat q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  return q.normalized();
}

inline geom::Pose3 random_pose(sim::Rng& rng, double trans = 5.0) {
  return {random_rotation(rng), random_vec(rng, trans)};
}

inline geom::Cov6 random_spd(sim::Rng& rng, double scale = 0.01) {
  geom::Mat6 a;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a(i, j) = rng.normal(scale);
  return a * a.transpose() + scale * scale * geom::Mat6::Identity();
}

inline double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

}  // namespace testing
