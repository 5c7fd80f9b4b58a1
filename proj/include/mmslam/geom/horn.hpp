#pragma once

#include <span>

#include "mmslam/geom/pose.hpp"

namespace mmslam::geom {

// Rigid alignment gt ~= T * est. The rotation is Horn's closed-form
// unit-quaternion solution computed about the first correspondence, and the
// translation maps est[0] exactly onto gt[0].
//
// Throws Error(kDegenerate) for fewer than 3 points or a collinear set, and
// Error(kDimensionMismatch) when the inputs differ in length.
Pose3 horn_align(std::span<const Vec3> est, std::span<const Vec3> gt);

// Least-squares rigid fit dst ~= T * src (Umeyama, no scale).
Pose3 rigid_fit(std::span<const Vec3> src, std::span<const Vec3> dst);

}  // namespace mmslam::geom
