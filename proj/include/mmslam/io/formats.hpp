#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "mmslam/cloud/point_cloud.hpp"
#include "mmslam/visual/types.hpp"

namespace mmslam::io {

// Binary cloud, little-endian:
//   u32 count; u8 has_rgb; count x { f32 x, y, z [, f32 r, g, b] }
// Values are written as float32, so a round trip is exact only for clouds
// that already hold float32-representable coordinates.
void write_cloud(const std::filesystem::path& path, const cloud::PointCloud& cloud);
cloud::PointCloud read_cloud(const std::filesystem::path& path);

// Features as a JSON array of {pixel: [u, v], descriptor: hex, response,
// depth (null when unknown)}. Landmarks are rebuilt from depth on read.
nlohmann::json features_to_json(const std::vector<visual::VisualFeature>& features);
std::vector<visual::VisualFeature> features_from_json(const nlohmann::json& j,
                                                      const visual::CameraIntrinsics& intr);

struct StampedPose {
  double t = 0.0;
  geom::Pose3 pose;
};

// One pose per line: t tx ty tz qx qy qz qw, printed with %.17g so the text
// round-trips doubles exactly. Lines starting with '#' are ignored on read.
std::string format_pose_line(double t, const geom::Pose3& p);
void write_trajectory(const std::filesystem::path& path, const std::vector<StampedPose>& traj);
std::vector<StampedPose> read_trajectory(const std::filesystem::path& path);

nlohmann::json pose_to_json(const geom::Pose3& p);       // {"t": [..], "q": [x, y, z, w]}
geom::Pose3 pose_from_json(const nlohmann::json& j);
nlohmann::json cov_to_json(const geom::Cov6& c);         // 36 numbers, row-major
geom::Cov6 cov_from_json(const nlohmann::json& j);

nlohmann::json intrinsics_to_json(const visual::CameraIntrinsics& intr);
visual::CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);

// Whole-file text helpers; throw Error(kIo).
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace mmslam::io
