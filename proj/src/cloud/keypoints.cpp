#include <algorithm>
#include <numeric>

#include "mmslam/cloud/features.hpp"
#include "mmslam/error.hpp"

namespace mmslam::cloud {

std::vector<std::size_t> sample_keypoints(const PointCloud& cloud,
                                          const std::vector<double>& curvature,
                                          const KeypointSampling& cfg) {
  if (curvature.size() != cloud.size())
    throw Error(ErrorCode::kDimensionMismatch, "sample_keypoints: curvature not parallel to cloud");
  std::vector<std::size_t> selected;
  if (cloud.empty()) return selected;

  std::vector<double> sorted = curvature;
  std::sort(sorted.begin(), sorted.end());
  const double q = std::clamp(cfg.quantile, 0.0, 1.0);
  const auto qi = static_cast<std::size_t>(q * static_cast<double>(sorted.size() - 1));
  const double threshold = std::max(sorted[qi], cfg.min_curvature);

  std::vector<std::size_t> seeds;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (curvature[i] > threshold) seeds.push_back(i);
  std::stable_sort(seeds.begin(), seeds.end(), [&](std::size_t a, std::size_t b) {
    return curvature[a] > curvature[b];
  });

  const double spacing_sq = cfg.min_spacing * cfg.min_spacing;
  for (std::size_t s : seeds) {
    const Vec3& p = cloud.points[s];
    const bool clear = std::none_of(selected.begin(), selected.end(), [&](std::size_t k) {
      return (cloud.points[k] - p).squaredNorm() < spacing_sq;
    });
    if (clear) selected.push_back(s);
  }
  return selected;
}

}  // namespace mmslam::cloud
