#include "mmslam/sim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mmslam/error.hpp"
#include "mmslam/geom/horn.hpp"

namespace mmslam::sim {

Metrics evaluate_submaps(const std::map<std::uint64_t, geom::Pose3>& est,
                         const std::map<std::uint64_t, geom::Pose3>& gt) {
  if (est.empty() || est.size() != gt.size())
    throw Error(ErrorCode::kIdMismatch, "submap id sets differ");
  Metrics m;
  double sp = 0.0, sz = 0.0, sa = 0.0;
  for (const auto& [id, e] : est) {
    auto it = gt.find(id);
    if (it == gt.end()) throw Error(ErrorCode::kIdMismatch, "no ground truth for submap " + std::to_string(id));
    const geom::Pose3 err = it->second * e.inverse();
    sp += err.translation().squaredNorm();
    sz += err.translation().z() * err.translation().z();
    const double a = geom::rotation_angle(err.rotation_matrix()) * 180.0 / std::numbers::pi;
    sa += a * a;
  }
  const double n = static_cast<double>(est.size());
  m.rmse_pos = std::sqrt(sp / n);
  m.rmse_z = std::sqrt(sz / n);
  m.rmse_angle = std::sqrt(sa / n);
  m.count = est.size();
  return m;
}

Metrics evaluate_dgps(const std::vector<io::StampedPose>& est, const std::vector<StampedPosition>& gt,
                      double window) {
  std::vector<geom::Vec3> e, g;
  std::vector<StampedPosition> sorted = gt;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  for (const auto& s : est) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), s.t,
                               [](const StampedPosition& p, double t) { return p.t < t; });
    const StampedPosition* best = nullptr;
    double best_dt = window;
    for (auto c : {it, it == sorted.begin() ? sorted.end() : std::prev(it)}) {
      if (c == sorted.end()) continue;
      const double d = std::abs(c->t - s.t);
      if (d <= best_dt && (!best || d < best_dt)) {
        best = &*c;
        best_dt = d;
      }
    }
    if (!best) continue;
    e.push_back(s.pose.translation());
    g.push_back(best->position);
  }
  if (e.size() < 3) throw Error(ErrorCode::kPrecondition, "fewer than 3 timestamp correspondences");
  const geom::Pose3 align = geom::horn_align(e, g);
  double s = 0.0, sz = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const geom::Vec3 d = align * e[i] - g[i];
    s += d.squaredNorm();
    sz += d.z() * d.z();
  }
  Metrics m;
  m.count = e.size();
  m.rmse_pos = std::sqrt(s / static_cast<double>(e.size()));
  m.rmse_z = std::sqrt(sz / static_cast<double>(e.size()));
  return m;
}

}  // namespace mmslam::sim
