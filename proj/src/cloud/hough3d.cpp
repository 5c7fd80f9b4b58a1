#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <Eigen/Cholesky>

#include "mmslam/cloud/correspondence.hpp"
#include "mmslam/error.hpp"
#include "mmslam/geom/horn.hpp"

namespace mmslam::cloud {

std::vector<TransformHypothesis> hough3d_cluster(const std::vector<Keypoint3D>& set0,
                                                 const std::vector<Keypoint3D>& set1,
                                                 const std::vector<Correspondence3D>& corrs,
                                                 const Vec3& model_reference, double bin_size,
                                                 std::size_t min_votes) {
  if (bin_size <= 0.0) throw Error(ErrorCode::kInvalidArgument, "hough3d: bin_size must be > 0");
  const std::size_t threshold = std::max<std::size_t>(min_votes, 3);

  using Key = std::array<long long, 3>;
  std::map<Key, std::vector<Correspondence3D>> grid;
  for (const auto& c : corrs) {
    if (c.index0 >= set0.size() || c.index1 >= set1.size())
      throw Error(ErrorCode::kInvalidArgument, "hough3d: correspondence index out of range");
    const Keypoint3D& m = set0[c.index0];
    const Keypoint3D& s = set1[c.index1];
    const Vec3 local = m.lrf.transpose() * (model_reference - m.position);
    const Vec3 vote = s.position + s.lrf * local;
    const Key key{static_cast<long long>(std::floor(vote.x() / bin_size)),
                  static_cast<long long>(std::floor(vote.y() / bin_size)),
                  static_cast<long long>(std::floor(vote.z() / bin_size))};
    grid[key].push_back(c);
  }

  std::vector<TransformHypothesis> hyps;
  for (auto& [key, voters] : grid) {
    if (voters.size() < threshold) continue;
    std::sort(voters.begin(), voters.end(), [](const auto& a, const auto& b) {
      return a.index0 != b.index0 ? a.index0 < b.index0 : a.index1 < b.index1;
    });
    std::vector<Vec3> src, dst;
    for (const auto& c : voters) {
      src.push_back(set0[c.index0].position);
      dst.push_back(set1[c.index1].position);
    }
    TransformHypothesis h;
    try {
      h.transform = geom::rigid_fit(src, dst);
    } catch (const Error&) {
      continue;
    }
    h.voters = voters.size();
    h.correspondences = voters;
    hyps.push_back(std::move(h));
  }
  std::stable_sort(hyps.begin(), hyps.end(),
                   [](const auto& a, const auto& b) { return a.voters > b.voters; });
  return hyps;
}

double mahalanobis_sq(const geom::PoseWithCov& prior, const geom::Pose3& pose) {
  const geom::Vec6 xi = prior.pose.local(pose);
  const geom::Cov6 cov = prior.cov + 1e-12 * geom::Cov6::Identity();
  return xi.dot(cov.ldlt().solve(xi));
}

std::optional<TransformHypothesis> select_hypothesis(const std::vector<TransformHypothesis>& hyps,
                                                     const geom::PoseWithCov& prior, double gate) {
  const TransformHypothesis* best = nullptr;
  for (const auto& h : hyps) {
    if (mahalanobis_sq(prior, h.transform) > gate * gate) continue;
    if (!best || h.voters > best->voters) best = &h;
  }
  if (!best) return std::nullopt;
  return *best;
}

}  // namespace mmslam::cloud
