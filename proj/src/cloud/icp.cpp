#include "mmslam/cloud/icp.hpp"

#include <algorithm>
#include <cmath>

#include "mmslam/error.hpp"
#include "mmslam/geom/horn.hpp"

namespace mmslam::cloud {

namespace {

struct Association {
  std::vector<Vec3> src, dst;
  double truncated_sq_sum = 0.0;
  std::size_t inliers = 0;
};

Association associate(const std::vector<Vec3>& source, const PointCloud& target,
                      const KdTree& index, const Pose3& T, double max_dist) {
  Association a;
  const double cap = max_dist * max_dist;
  for (const auto& p : source) {
    const auto nn = index.nearest(T * p);
    if (nn.dist_sq <= cap) {
      a.src.push_back(p);
      a.dst.push_back(target.points[nn.index]);
      a.truncated_sq_sum += nn.dist_sq;
      ++a.inliers;
    } else {
      a.truncated_sq_sum += cap;
    }
  }
  return a;
}

}  // namespace

IcpResult icp_refine(const PointCloud& source, const PointCloud& target, const Pose3& init,
                     const IcpConfig& cfg) {
  if (target.empty()) throw Error(ErrorCode::kEmptyInput, "icp: empty target cloud");
  const KdTree index = KdTree::from_points(target.points);
  return icp_refine(source, target, index, init, cfg);
}

IcpResult icp_refine(const PointCloud& source, const PointCloud& target, const KdTree& target_index,
                     const Pose3& init, const IcpConfig& cfg) {
  if (source.empty() || target.empty()) throw Error(ErrorCode::kEmptyInput, "icp: empty cloud");
  if (cfg.max_corr_dist <= 0.0) throw Error(ErrorCode::kInvalidArgument, "icp: max_corr_dist must be > 0");

  std::vector<Vec3> src;
  const std::size_t stride =
      cfg.max_source_points > 0 ? std::max<std::size_t>(1, source.size() / cfg.max_source_points) : 1;
  for (std::size_t i = 0; i < source.size(); i += stride) src.push_back(source.points[i]);
  const double n = static_cast<double>(src.size());

  IcpResult res;
  res.transform = init;
  Association assoc = associate(src, target, target_index, init, cfg.max_corr_dist);
  if (assoc.inliers == 0) throw Error(ErrorCode::kNoOverlap, "icp: no correspondences at initial pose");
  double rms = std::sqrt(assoc.truncated_sq_sum / n);
  res.rms_history.push_back(rms);

  for (int it = 0; it < cfg.max_iters; ++it) {
    if (assoc.inliers < 3) break;
    Pose3 next;
    try {
      next = geom::rigid_fit(assoc.src, assoc.dst);
    } catch (const Error&) {
      break;
    }
    Association next_assoc = associate(src, target, target_index, next, cfg.max_corr_dist);
    const double next_rms = std::sqrt(next_assoc.truncated_sq_sum / n);
    if (next_rms > rms) break;  // round-off only; the truncated cost cannot grow
    res.transform = next;
    assoc = std::move(next_assoc);
    res.iterations = it + 1;
    res.rms_history.push_back(next_rms);
    const double change = rms - next_rms;
    rms = next_rms;
    if (change < cfg.rms_tol) break;
  }
  res.rms = rms;
  res.fitness = static_cast<double>(assoc.inliers) / n;
  return res;
}

}  // namespace mmslam::cloud
