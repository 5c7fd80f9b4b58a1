#pragma once

#include <cstdint>
#include <vector>

#include "mmslam/sim/dataset.hpp"
#include "mmslam/sim/world.hpp"

namespace mmslam::sim {

// Circuit around `center`: `loops` laps of a circle, each lap's radius
// shifted by `lap_offset`, sampled every `step` metres.
struct TrajectorySpec {
  Vec2 center = Vec2::Zero();
  double radius = 6.4;      // m, about 40 m per lap
  int loops = 2;
  double lap_offset = 0.3;  // m added to the radius on every further lap
  double step = 0.25;       // m between frames
  double dt = 0.5;          // s between frames
  double start_angle = -1.5707963267948966;  // rad, position angle of the first frame
  bool clockwise = false;

  void validate() const;
};

// Ground-truth body poses, level, at terrain height. Throws Error(kOutOfBounds)
// when the circuit leaves the world.
std::vector<Pose3> plan_trajectory(const WorldModel& world, const TrajectorySpec& spec);

// Frames along `gt`. The odometry noise is injected per step as a body-frame
// perturbation (yaw and translation only) and the reported covariance is the
// exact first-order propagation of the injected noise.
Dataset simulate_run(const WorldModel& world, const std::vector<Pose3>& gt, double dt,
                     const SensorModel& sensors, std::uint64_t seed);

// Forward camera ray cast against the surface; returns false on no hit
// within max_range.
bool raycast(const WorldModel& world, const Vec3& origin, const Vec3& dir, double max_range,
             Vec3* hit);

}  // namespace mmslam::sim
