#pragma once

#include <span>
#include <vector>

#include "mmslam/visual/types.hpp"

namespace mmslam::visual {

// Mutual nearest neighbors under Hamming distance, keeping pairs with
// distance <= max_hamming. Ties resolve to the lower index.
std::vector<FeatureMatch> match_binary(std::span<const VisualFeature> f0,
                                       std::span<const VisualFeature> f1, int max_hamming = 50);

// True iff |roll| <= max_angle and |pitch| <= max_angle (inclusive).
bool gravity_check(const Pose3& T, double max_angle);

}  // namespace mmslam::visual
