#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mmslam/cloud/point_cloud.hpp"
#include "mmslam/io/formats.hpp"
#include "mmslam/visual/types.hpp"

namespace mmslam::sim {

using geom::Pose3;
using geom::PoseWithCov;

struct SensorModel {
  double odo_sigma_trans = 0.01;      // m per sqrt(m) travelled
  double odo_sigma_rot = 0.01;        // rad per sqrt(rad) turned
  double odo_sigma_yaw_per_m = 0.01;  // rad per sqrt(m) travelled
  double depth_noise_a = 0.004;       // sigma_z = a z^2, 1/m
  double bit_flip_prob = 0.01;
  double pixel_noise = 0.5;           // px
  double max_range = 5.0;             // m, stereo depth limit
  double camera_height = 1.0;         // m above the body origin
  double camera_tilt = 0.4363;        // rad below the horizon
  int cloud_cols = 48;                // stereo rays per frame, horizontally
  int cloud_rows = 36;
  visual::CameraIntrinsics intrinsics;

  void validate() const;
  // T_b^c: camera frame (z forward, x right, y down) into the body frame
  // (x forward, y left, z up).
  Pose3 camera_in_body() const;
};

struct Frame {
  std::size_t index = 0;
  double timestamp = 0.0;
  Pose3 gt;                 // body pose in the world
  PoseWithCov vio;          // drifting odometry with its covariance
  cloud::PointCloud cloud;  // body frame
  std::vector<visual::VisualFeature> features;  // landmarks in the camera frame
};

struct Dataset {
  SensorModel sensors;
  std::string description;  // free text carried in the manifest
  std::vector<Frame> frames;
};

// Directory layout:
//   manifest.json     sensors, intrinsics, extrinsic, frame index
//                     (timestamp, vio covariance, file names)
//   frames/NNNN.bin   cloud (see io::write_cloud)
//   features/NNNN.json
//   gt.txt, vio.txt   one pose per line: t tx ty tz qx qy qz qw
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& dir);

nlohmann::json sensors_to_json(const SensorModel& s);
SensorModel sensors_from_json(const nlohmann::json& j);

}  // namespace mmslam::sim
