#include "mmslam/sim/simulator.hpp"

#include <cmath>
#include <numbers>

#include "mmslam/error.hpp"
#include "mmslam/sim/random.hpp"

namespace mmslam::sim {

using geom::Cov6;
using geom::Mat3;
using geom::Vec6;

void SensorModel::validate() const {
  if (!(odo_sigma_trans >= 0 && odo_sigma_rot >= 0 && odo_sigma_yaw_per_m >= 0 &&
        depth_noise_a >= 0 && bit_flip_prob >= 0 && bit_flip_prob <= 1 && pixel_noise >= 0 &&
        max_range > 0 && camera_height > 0 && cloud_cols > 0 && cloud_rows > 0))
    throw Error(ErrorCode::kConfig, "invalid sensor model");
  intrinsics.validate();
}

Pose3 SensorModel::camera_in_body() const {
  const double c = std::cos(camera_tilt);
  const double s = std::sin(camera_tilt);
  Mat3 R;
  R.col(0) = Vec3(0.0, -1.0, 0.0);  // camera x: right
  R.col(1) = Vec3(-s, 0.0, -c);     // camera y: down
  R.col(2) = Vec3(c, 0.0, -s);      // camera z: forward, tilted down
  return Pose3(R, Vec3(0.0, 0.0, camera_height));
}

void TrajectorySpec::validate() const {
  if (!(radius > 0 && loops >= 1 && step > 0 && dt > 0 && radius + lap_offset * loops > 0))
    throw Error(ErrorCode::kConfig, "invalid trajectory spec");
}

std::vector<Pose3> plan_trajectory(const WorldModel& world, const TrajectorySpec& spec) {
  spec.validate();
  std::vector<Pose3> out;
  const double total = 2.0 * std::numbers::pi * spec.loops;
  const double sign = spec.clockwise ? -1.0 : 1.0;
  // The radius grows linearly with the swept angle, so lap n runs
  // lap_offset * n outside lap 0 without a jump at the lap boundary.
  double swept = 0.0;
  while (swept <= total + 1e-12) {
    const double r = spec.radius + spec.lap_offset * swept / (2.0 * std::numbers::pi);
    const double a = spec.start_angle + sign * swept;
    const double x = spec.center.x() + r * std::cos(a);
    const double y = spec.center.y() + r * std::sin(a);
    if (!world.in_bounds(x, y))
      throw Error(ErrorCode::kOutOfBounds, "trajectory leaves the world bounds");
    const double yaw = a + sign * 0.5 * std::numbers::pi;
    out.push_back(geom::from_ypr(yaw, 0.0, 0.0, Vec3(x, y, world.terrain_height(x, y))));
    swept += spec.step / r;
  }
  return out;
}

bool raycast(const WorldModel& world, const Vec3& origin, const Vec3& dir, double max_range, Vec3* hit) {
  constexpr double kStep = 0.08;
  auto f = [&](double t) {
    const Vec3 p = origin + t * dir;
    return p.z() - world.surface_height(p.x(), p.y());
  };
  double t_prev = 0.0;
  if (f(0.0) <= 0.0) return false;
  for (double t = kStep;; t += kStep) {
    const double tc = std::min(t, max_range);
    if (f(tc) <= 0.0) {
      double lo = t_prev, hi = tc;
      for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
      }
      *hit = origin + hi * dir;
      return true;
    }
    if (tc >= max_range) return false;
    t_prev = tc;
  }
}

namespace {

bool line_of_sight(const WorldModel& world, const Vec3& from, const Vec3& to) {
  const Vec3 d = to - from;
  const double len = d.norm();
  const double stop = len - 0.15;
  for (double t = 0.1; t < stop; t += 0.1) {
    const Vec3 p = from + (t / len) * d;
    if (p.z() <= world.surface_height(p.x(), p.y())) return false;
  }
  return true;
}

}  // namespace

Dataset simulate_run(const WorldModel& world, const std::vector<Pose3>& gt, double dt,
                     const SensorModel& sensors, std::uint64_t seed) {
  sensors.validate();
  Dataset ds;
  ds.sensors = sensors;
  Rng odo_rng(mix_seed(seed, 10));
  Rng cloud_rng(mix_seed(seed, 11));
  Rng feat_rng(mix_seed(seed, 12));
  const Pose3 T_bc = sensors.camera_in_body();
  const auto& intr = sensors.intrinsics;
  constexpr double kFeatureRange = 10.0;

  PoseWithCov vio{gt.empty() ? Pose3() : gt.front(), Cov6::Zero()};
  for (std::size_t k = 0; k < gt.size(); ++k) {
    Frame fr;
    fr.index = k;
    fr.timestamp = static_cast<double>(k) * dt;
    fr.gt = gt[k];

    if (k > 0) {
      const Pose3 delta = gt[k - 1].inverse() * gt[k];
      const double len = delta.translation().norm();
      const double turned = geom::rotation_angle(delta.rotation());
      const double var_yaw = sensors.odo_sigma_rot * sensors.odo_sigma_rot * turned +
                             sensors.odo_sigma_yaw_per_m * sensors.odo_sigma_yaw_per_m * len;
      const double var_t = sensors.odo_sigma_trans * sensors.odo_sigma_trans * len;
      Vec6 xi = Vec6::Zero();
      xi(2) = odo_rng.normal(std::sqrt(var_yaw));
      for (int i = 3; i < 6; ++i) xi(i) = odo_rng.normal(std::sqrt(var_t));
      Cov6 q = Cov6::Zero();
      q(2, 2) = var_yaw;
      q(3, 3) = q(4, 4) = q(5, 5) = var_t;
      vio = geom::propagate_cov(vio, {delta.retract(xi), q});
    }
    fr.vio = vio;

    const Pose3 cam = gt[k] * T_bc;
    const Pose3 cam_inv = cam.inverse();
    const Mat3 Rc = cam.rotation_matrix();
    for (int r = 0; r < sensors.cloud_rows; ++r) {
      for (int c = 0; c < sensors.cloud_cols; ++c) {
        const Vec2 px((c + 0.5) * intr.width / sensors.cloud_cols, (r + 0.5) * intr.height / sensors.cloud_rows);
        const Vec3 ray_c = intr.bearing(px);
        Vec3 hit;
        if (!raycast(world, cam.translation(), Rc * ray_c, sensors.max_range / ray_c.z(), &hit)) continue;
        const Vec3 p_c = cam_inv * hit;
        const double z = p_c.z();
        if (z <= 0.0 || z > sensors.max_range) continue;
        const double zn = z + cloud_rng.normal(sensors.depth_noise_a * z * z);
        if (zn <= 0.0) continue;
        const Vec3 p_b = T_bc * (p_c * (zn / z));
        // Stored at float32 precision, as on disk.
        fr.cloud.points.emplace_back(double(float(p_b.x())), double(float(p_b.y())), double(float(p_b.z())));
      }
    }

    for (const auto& lm : world.landmarks()) {
      if ((lm.position - cam.translation()).squaredNorm() > kFeatureRange * kFeatureRange) continue;
      const Vec3 p_c = cam_inv * lm.position;
      if (p_c.z() < 0.2) continue;
      const Vec2 px = intr.project(p_c);
      if (!intr.in_image(px)) continue;
      if (!line_of_sight(world, cam.translation(), lm.position)) continue;
      const Vec2 noisy = px + Vec2(feat_rng.normal(sensors.pixel_noise), feat_rng.normal(sensors.pixel_noise));
      visual::BinaryDescriptor d = lm.descriptor;
      for (int b = 0; b < visual::kDescriptorBits; ++b)
        if (feat_rng.uniform() < sensors.bit_flip_prob) d.flip(b);
      std::optional<double> depth;
      const double z = p_c.z();
      const double zn = z + feat_rng.normal(sensors.depth_noise_a * z * z);
      if (z <= sensors.max_range && zn > 0.0) depth = zn;
      if (!intr.in_image(noisy)) continue;
      fr.features.push_back(visual::VisualFeature::make(noisy, d, lm.response, depth, intr));
    }
    ds.frames.push_back(std::move(fr));
  }
  return ds;
}

}  // namespace mmslam::sim
