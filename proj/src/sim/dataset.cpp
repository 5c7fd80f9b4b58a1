#include "mmslam/sim/dataset.hpp"

#include <cstdio>

#include "mmslam/error.hpp"

namespace mmslam::sim {

namespace fs = std::filesystem;

namespace {

std::string frame_name(std::size_t i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu.%s", i, ext);
  return buf;
}

}  // namespace

nlohmann::json sensors_to_json(const SensorModel& s) {
  return {{"odo_sigma_trans", s.odo_sigma_trans},
          {"odo_sigma_rot", s.odo_sigma_rot},
          {"odo_sigma_yaw_per_m", s.odo_sigma_yaw_per_m},
          {"depth_noise_a", s.depth_noise_a},
          {"bit_flip_prob", s.bit_flip_prob},
          {"pixel_noise", s.pixel_noise},
          {"max_range", s.max_range},
          {"camera_height", s.camera_height},
          {"camera_tilt", s.camera_tilt},
          {"cloud_cols", s.cloud_cols},
          {"cloud_rows", s.cloud_rows},
          {"intrinsics", io::intrinsics_to_json(s.intrinsics)}};
}

SensorModel sensors_from_json(const nlohmann::json& j) {
  SensorModel s;
  s.odo_sigma_trans = j.at("odo_sigma_trans").get<double>();
  s.odo_sigma_rot = j.at("odo_sigma_rot").get<double>();
  s.odo_sigma_yaw_per_m = j.at("odo_sigma_yaw_per_m").get<double>();
  s.depth_noise_a = j.at("depth_noise_a").get<double>();
  s.bit_flip_prob = j.at("bit_flip_prob").get<double>();
  s.pixel_noise = j.at("pixel_noise").get<double>();
  s.max_range = j.at("max_range").get<double>();
  s.camera_height = j.at("camera_height").get<double>();
  s.camera_tilt = j.at("camera_tilt").get<double>();
  s.cloud_cols = j.at("cloud_cols").get<int>();
  s.cloud_rows = j.at("cloud_rows").get<int>();
  s.intrinsics = io::intrinsics_from_json(j.at("intrinsics"));
  s.validate();
  return s;
}

void write_dataset(const fs::path& dir, const Dataset& ds) {
  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  fs::create_directories(dir / "features", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create dataset directory " + dir.string());

  nlohmann::json manifest;
  manifest["format"] = "mmslam-dataset-1";
  manifest["description"] = ds.description;
  manifest["sensors"] = sensors_to_json(ds.sensors);
  manifest["camera_in_body"] = io::pose_to_json(ds.sensors.camera_in_body());
  manifest["frames"] = nlohmann::json::array();

  std::vector<io::StampedPose> gt, vio;
  for (const auto& f : ds.frames) {
    const std::string cloud_file = "frames/" + frame_name(f.index, "bin");
    const std::string feat_file = "features/" + frame_name(f.index, "json");
    io::write_cloud(dir / cloud_file, f.cloud);
    io::write_text(dir / feat_file, io::features_to_json(f.features).dump() + "\n");
    manifest["frames"].push_back({{"index", f.index},
                                  {"timestamp", f.timestamp},
                                  {"vio_cov", io::cov_to_json(f.vio.cov)},
                                  {"cloud", cloud_file},
                                  {"features", feat_file}});
    gt.push_back({f.timestamp, f.gt});
    vio.push_back({f.timestamp, f.vio.pose});
  }
  io::write_text(dir / "manifest.json", manifest.dump(1) + "\n");
  io::write_trajectory(dir / "gt.txt", gt);
  io::write_trajectory(dir / "vio.txt", vio);
}

Dataset read_dataset(const fs::path& dir) {
  Dataset ds;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(io::read_text(dir / "manifest.json"));
    ds.description = manifest.value("description", "");
    ds.sensors = sensors_from_json(manifest.at("sensors"));
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kIo, "malformed manifest in " + dir.string() + ": " + ex.what());
  }
  const auto gt = io::read_trajectory(dir / "gt.txt");
  const auto vio = io::read_trajectory(dir / "vio.txt");
  const auto& frames = manifest.at("frames");
  if (gt.size() != frames.size() || vio.size() != frames.size())
    throw Error(ErrorCode::kIo, "trajectory files disagree with the manifest frame index");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& e = frames[i];
    Frame f;
    try {
      f.index = e.at("index").get<std::size_t>();
      f.timestamp = e.at("timestamp").get<double>();
      f.vio = {vio[i].pose, io::cov_from_json(e.at("vio_cov"))};
      f.gt = gt[i].pose;
      f.cloud = io::read_cloud(dir / e.at("cloud").get<std::string>());
      f.features = io::features_from_json(
          nlohmann::json::parse(io::read_text(dir / e.at("features").get<std::string>())),
          ds.sensors.intrinsics);
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::kIo, "malformed frame entry " + std::to_string(i) + ": " + ex.what());
    }
    ds.frames.push_back(std::move(f));
  }
  return ds;
}

}  // namespace mmslam::sim
