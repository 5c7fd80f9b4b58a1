#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmslam/geom/pose.hpp"

namespace mmslam::visual {

using geom::Pose3;
using geom::Vec2;
using geom::Vec3;

// 256-bit binary descriptor (ORB-sized).
struct BinaryDescriptor {
  std::array<std::uint64_t, 4> bits{};

  bool test(int i) const { return (bits[static_cast<std::size_t>(i / 64)] >> (i % 64)) & 1u; }
  void flip(int i) { bits[static_cast<std::size_t>(i / 64)] ^= (std::uint64_t{1} << (i % 64)); }
  void set(int i, bool v) {
    if (test(i) != v) flip(i);
  }

  // 64 lowercase hex characters, most significant word first.
  std::string to_hex() const;
  static BinaryDescriptor from_hex(const std::string& hex);

  auto operator<=>(const BinaryDescriptor&) const = default;
};

constexpr int kDescriptorBits = 256;

int hamming(const BinaryDescriptor& a, const BinaryDescriptor& b);

struct CameraIntrinsics {
  double fx = 400.0, fy = 400.0;
  double cx = 320.0, cy = 240.0;
  int width = 640, height = 480;

  // Throws Error(kConfig) unless fx, fy > 0 and the principal point is inside the image.
  void validate() const;
  Vec2 project(const Vec3& p_cam) const;
  Vec3 backproject(const Vec2& pixel, double depth) const;
  Vec3 bearing(const Vec2& pixel) const;  // unit ray
  bool in_image(const Vec2& pixel) const;
};

// A keypoint observation. When depth is known the landmark (camera frame)
// is its back-projection, so landmark->z() == *depth.
struct VisualFeature {
  Vec2 pixel = Vec2::Zero();
  BinaryDescriptor descriptor;
  double response = 0.0;
  std::optional<double> depth;
  std::optional<Vec3> landmark;

  static VisualFeature make(const Vec2& pixel, const BinaryDescriptor& desc, double response,
                            std::optional<double> depth, const CameraIntrinsics& intr);
};

struct FeatureMatch {
  std::size_t index0 = 0;
  std::size_t index1 = 0;
  int distance = 0;

  bool operator==(const FeatureMatch&) const = default;
};

}  // namespace mmslam::visual
