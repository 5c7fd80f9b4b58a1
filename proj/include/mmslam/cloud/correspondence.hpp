#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mmslam/cloud/shot.hpp"
#include "mmslam/geom/pose.hpp"

namespace mmslam::cloud {

struct Correspondence3D {
  std::size_t index0 = 0;  // into set0 (model, older submap)
  std::size_t index1 = 0;  // into set1 (scene, newer submap)
  double distance = 0.0;

  bool operator==(const Correspondence3D&) const = default;
};

// Nearest neighbor in set0 for every usable descriptor of set1. Uses a
// kd-tree once set0 has at least 100 usable descriptors, a linear scan
// otherwise. Throws Error(kDimensionMismatch) on differing descriptor sizes.
std::vector<Correspondence3D> match_descriptors(const std::vector<Keypoint3D>& set0,
                                                const std::vector<Keypoint3D>& set1,
                                                double max_distance);

struct TransformHypothesis {
  geom::Pose3 transform;  // maps set0 coordinates into set1 coordinates
  std::size_t voters = 0;
  std::vector<Correspondence3D> correspondences;
};

// Each correspondence votes for the location of `model_reference` (in set0
// coordinates) as seen from set1, transported through the two LRFs. Votes
// fall into a translation grid of edge `bin_size`; cells with at least
// max(min_votes, 3) voters become hypotheses, sorted by voters descending.
std::vector<TransformHypothesis> hough3d_cluster(const std::vector<Keypoint3D>& set0,
                                                 const std::vector<Keypoint3D>& set1,
                                                 const std::vector<Correspondence3D>& corrs,
                                                 const geom::Vec3& model_reference,
                                                 double bin_size, std::size_t min_votes);

// Squared Mahalanobis distance of `pose` from `prior` in the tangent space.
double mahalanobis_sq(const geom::PoseWithCov& prior, const geom::Pose3& pose);

// Most-voted hypothesis whose Mahalanobis distance from the prior is <= gate.
std::optional<TransformHypothesis> select_hypothesis(const std::vector<TransformHypothesis>& hyps,
                                                     const geom::PoseWithCov& prior, double gate);

}  // namespace mmslam::cloud
