#include "mmslam/cloud/correspondence.hpp"

#include "mmslam/cloud/kdtree.hpp"
#include "mmslam/error.hpp"

namespace mmslam::cloud {

std::vector<Correspondence3D> match_descriptors(const std::vector<Keypoint3D>& set0,
                                                const std::vector<Keypoint3D>& set1,
                                                double max_distance) {
  std::vector<Correspondence3D> out;
  std::vector<std::size_t> usable0;
  Eigen::Index dim = -1;
  for (const auto* set : {&set0, &set1}) {
    for (const auto& kp : *set) {
      if (dim < 0) dim = kp.descriptor.size();
      if (kp.descriptor.size() != dim)
        throw Error(ErrorCode::kDimensionMismatch, "match_descriptors: descriptor sizes differ");
    }
  }
  for (std::size_t i = 0; i < set0.size(); ++i)
    if (set0[i].usable) usable0.push_back(i);
  if (usable0.empty()) return out;

  const auto udim = static_cast<std::size_t>(dim);
  const bool use_tree = usable0.size() >= 100;
  KdTree tree;
  if (use_tree) {
    std::vector<double> data;
    data.reserve(usable0.size() * udim);
    for (std::size_t i : usable0)
      data.insert(data.end(), set0[i].descriptor.data(), set0[i].descriptor.data() + dim);
    tree = KdTree(std::move(data), udim);
  }

  for (std::size_t j = 0; j < set1.size(); ++j) {
    if (!set1[j].usable) continue;
    const Eigen::VectorXd& q = set1[j].descriptor;
    std::size_t best = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    if (use_tree) {
      const auto nn = tree.nearest(std::span<const double>(q.data(), udim));
      best = usable0[nn.index];
      best_sq = nn.dist_sq;
    } else {
      for (std::size_t i : usable0) {
        const double d = (set0[i].descriptor - q).squaredNorm();
        if (d < best_sq) {
          best_sq = d;
          best = i;
        }
      }
    }
    const double dist = std::sqrt(best_sq);
    if (dist <= max_distance) out.push_back({best, j, dist});
  }
  return out;
}

}  // namespace mmslam::cloud
