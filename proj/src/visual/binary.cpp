#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mmslam/error.hpp"
#include "mmslam/visual/matching.hpp"
#include "mmslam/visual/types.hpp"

namespace mmslam::visual {

std::string BinaryDescriptor::to_hex() const {
  std::string out;
  out.reserve(64);
  char buf[17];
  for (int w = 3; w >= 0; --w) {
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(bits[static_cast<std::size_t>(w)]));
    out += buf;
  }
  return out;
}

BinaryDescriptor BinaryDescriptor::from_hex(const std::string& hex) {
  if (hex.size() != 64) throw Error(ErrorCode::kInvalidArgument, "descriptor hex must be 64 chars");
  BinaryDescriptor d;
  for (int w = 0; w < 4; ++w) {
    std::uint64_t v = 0;
    for (int c = 0; c < 16; ++c) {
      const char ch = hex[static_cast<std::size_t>((3 - w) * 16 + c)];
      int nib;
      if (ch >= '0' && ch <= '9') nib = ch - '0';
      else if (ch >= 'a' && ch <= 'f') nib = ch - 'a' + 10;
      else if (ch >= 'A' && ch <= 'F') nib = ch - 'A' + 10;
      else throw Error(ErrorCode::kInvalidArgument, "descriptor hex: invalid character");
      v = (v << 4) | static_cast<std::uint64_t>(nib);
    }
    d.bits[static_cast<std::size_t>(w)] = v;
  }
  return d;
}

int hamming(const BinaryDescriptor& a, const BinaryDescriptor& b) {
  int d = 0;
  for (std::size_t i = 0; i < 4; ++i) d += std::popcount(a.bits[i] ^ b.bits[i]);
  return d;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorCode::kConfig, "intrinsics: focal lengths must be > 0");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kConfig, "intrinsics: image size must be > 0");
  if (cx < 0.0 || cx > width || cy < 0.0 || cy > height)
    throw Error(ErrorCode::kConfig, "intrinsics: principal point outside image");
}

Vec2 CameraIntrinsics::project(const Vec3& p) const {
  return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
}

Vec3 CameraIntrinsics::backproject(const Vec2& px, double depth) const {
  return {(px.x() - cx) / fx * depth, (px.y() - cy) / fy * depth, depth};
}

Vec3 CameraIntrinsics::bearing(const Vec2& px) const {
  return Vec3((px.x() - cx) / fx, (px.y() - cy) / fy, 1.0).normalized();
}

bool CameraIntrinsics::in_image(const Vec2& px) const {
  return px.x() >= 0.0 && px.y() >= 0.0 && px.x() < width && px.y() < height;
}

VisualFeature VisualFeature::make(const Vec2& pixel, const BinaryDescriptor& desc, double response,
                                  std::optional<double> depth, const CameraIntrinsics& intr) {
  VisualFeature f;
  f.pixel = pixel;
  f.descriptor = desc;
  f.response = response;
  if (depth && std::isfinite(*depth) && *depth > 0.0) {
    f.depth = depth;
    f.landmark = intr.backproject(pixel, *depth);
  }
  return f;
}

std::vector<FeatureMatch> match_binary(std::span<const VisualFeature> f0,
                                       std::span<const VisualFeature> f1, int max_hamming) {
  std::vector<FeatureMatch> out;
  if (f0.empty() || f1.empty()) return out;

  const auto best_in = [](std::span<const VisualFeature> set, const BinaryDescriptor& q) {
    std::size_t best = 0;
    int best_d = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < set.size(); ++i) {
      const int d = hamming(set[i].descriptor, q);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return std::pair{best, best_d};
  };

  std::vector<std::size_t> best1_for0(f0.size());
  for (std::size_t i = 0; i < f0.size(); ++i) best1_for0[i] = best_in(f1, f0[i].descriptor).first;

  for (std::size_t j = 0; j < f1.size(); ++j) {
    const auto [i, d] = best_in(f0, f1[j].descriptor);
    if (d <= max_hamming && best1_for0[i] == j) out.push_back({i, j, d});
  }
  return out;
}

bool gravity_check(const Pose3& T, double max_angle) {
  const auto rp = geom::roll_pitch(T);
  if (rp.gimbal_lock) return false;
  return std::abs(rp.roll) <= max_angle && std::abs(rp.pitch) <= max_angle;
}

}  // namespace mmslam::visual
