#include <cmath>

#include <Eigen/Eigenvalues>

#include "mmslam/error.hpp"
#include "mmslam/io/formats.hpp"
#include "mmslam/submap/submap.hpp"

namespace mmslam::submap {

namespace fs = std::filesystem;

const std::vector<cloud::Keypoint3D>& Submap::keypoints3d(const Keypoint3DConfig& cfg) const {
  std::call_once(cache_->once, [&] {
    cache_->keypoints = extract_keypoints3d(cloud, cfg);
    ++cache_->extractions;
  });
  return cache_->keypoints;
}

bool Submap::keypoints_cached() const { return cache_->extractions > 0; }
int Submap::keypoint_extractions() const { return cache_->extractions; }

std::vector<cloud::Keypoint3D> extract_keypoints3d(const cloud::PointCloud& pc,
                                                   const Keypoint3DConfig& cfg) {
  std::vector<cloud::Keypoint3D> out;
  if (pc.empty()) return out;
  const auto index = cloud::KdTree::from_points(pc.points);
  const auto est = cloud::estimate_normals_curvature(pc, index, cfg.normal_radius);
  const auto seeds = cloud::sample_keypoints(est.cloud, est.curvature, cfg.sampling);
  std::vector<geom::Vec3> positions;
  positions.reserve(seeds.size());
  for (std::size_t i : seeds) positions.push_back(est.cloud.points[i]);
  for (auto& kp : cloud::compute_descriptors(est.cloud, index, positions, cfg.shot))
    if (kp.usable) out.push_back(std::move(kp));
  return out;
}

void BuildConfig::validate() const {
  if (!(max_path_length > 0 && max_pose_sigma > 0 && kf_translation_thresh > 0 &&
        kf_rotation_thresh > 0 && bucket_cols > 0 && bucket_rows > 0 && per_cell_max > 0 &&
        voxel_leaf >= 0))
    throw Error(ErrorCode::kConfig, "submap build thresholds must be positive");
}

geom::Cov6 increment_cov(const PoseWithCov& a, const PoseWithCov& b) {
  const Pose3 d = a.pose.inverse() * b.pose;
  const geom::Mat6 Ad = geom::adjoint(d.inverse());
  return geom::nearest_psd(b.cov - Ad * a.cov * Ad.transpose());
}

SubmapBuilder::SubmapBuilder(BuildConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

void SubmapBuilder::start_submap(const PoseWithCov& vio) {
  open_.emplace();
  open_->id = next_submap_id_;
  origin_vio_ = geom::gravity_aligned(vio.pose);
  open_->origin_in_world = {origin_vio_, vio.cov};
  rel_ = {origin_vio_.inverse() * vio.pose, geom::Cov6::Zero()};
  last_kf_vio_.reset();
}

Submap SubmapBuilder::finalize() {
  Submap s = std::move(*open_);
  open_.reset();
  ++next_submap_id_;
  if (cfg_.voxel_leaf > 0.0 && !s.cloud.empty()) s.cloud = cloud::voxel_downsample(s.cloud, cfg_.voxel_leaf);
  return s;
}

FrameEvents SubmapBuilder::ingest_frame(std::size_t frame_index, double timestamp,
                                        const PoseWithCov& vio, const cloud::PointCloud& pc,
                                        const std::vector<visual::VisualFeature>& features,
                                        const visual::CameraIntrinsics& intr) {
  FrameEvents ev;
  if (!vio.pose.is_finite() || !vio.cov.allFinite()) {
    ev.dropped = true;
    ev.diagnostic = "frame " + std::to_string(frame_index) + ": non-finite odometry, dropped";
    return ev;
  }

  double step = 0.0;
  if (open_) {
    step = (vio.pose.translation() - last_vio_.pose.translation()).norm();
    const Pose3 rel_pose = origin_vio_.inverse() * vio.pose;
    const geom::Cov6 inc = increment_cov(last_vio_, vio);
    PoseWithCov next = geom::propagate_cov(rel_, {last_vio_.pose.inverse() * vio.pose, inc});
    next.pose = rel_pose;
    const Eigen::SelfAdjointEigenSolver<geom::Mat3> es(next.cov.bottomRightCorner<3, 3>());
    const double sigma = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    if (open_->travelled_path + step >= cfg_.max_path_length || sigma >= cfg_.max_pose_sigma) {
      ev.submap_finalized = true;
      ev.finalized = finalize();
    } else {
      rel_ = next;
    }
  }
  if (!open_) {
    start_submap(vio);
    step = 0.0;
  }

  Submap& s = *open_;
  s.travelled_path += step;
  last_vio_ = vio;
  const Pose3 in_submap = origin_vio_.inverse() * vio.pose;
  s.frames.push_back({frame_index, timestamp, in_submap});
  if (!pc.empty()) s.cloud.append(cloud::transform(pc, in_submap));

  bool make_kf = !last_kf_vio_;
  if (!make_kf) {
    const Pose3 d = last_kf_vio_->inverse() * vio.pose;
    make_kf = d.translation().norm() >= cfg_.kf_translation_thresh ||
              geom::rotation_angle(d.rotation()) >= cfg_.kf_rotation_thresh;
  }
  if (make_kf) {
    Keyframe kf;
    kf.id = next_keyframe_id_++;
    kf.frame_index = frame_index;
    kf.timestamp = timestamp;
    kf.pose_in_submap = {in_submap, rel_.cov};
    kf.features = bucket_features(features, intr, cfg_.bucket_cols, cfg_.bucket_rows, cfg_.per_cell_max);
    s.keyframes.push_back(std::move(kf));
    last_kf_vio_ = vio.pose;
    ev.keyframe_created = true;
  }
  return ev;
}

std::optional<Submap> SubmapBuilder::flush() {
  if (!open_) return std::nullopt;
  return finalize();
}

void write_submap(const fs::path& dir, const Submap& s) {
  fs::create_directories(dir);
  nlohmann::json j;
  j["id"] = s.id;
  j["origin"] = io::pose_to_json(s.origin_in_world.pose);
  j["origin_cov"] = io::cov_to_json(s.origin_in_world.cov);
  j["travelled_path"] = s.travelled_path;
  j["keyframes"] = nlohmann::json::array();
  for (const auto& kf : s.keyframes) {
    j["keyframes"].push_back({{"id", kf.id},
                              {"frame_index", kf.frame_index},
                              {"timestamp", kf.timestamp},
                              {"pose", io::pose_to_json(kf.pose_in_submap.pose)},
                              {"cov", io::cov_to_json(kf.pose_in_submap.cov)},
                              {"features", io::features_to_json(kf.features)}});
  }
  j["frames"] = nlohmann::json::array();
  for (const auto& f : s.frames)
    j["frames"].push_back(
        {{"frame_index", f.frame_index}, {"timestamp", f.timestamp}, {"pose", io::pose_to_json(f.pose_in_submap)}});
  io::write_text(dir / "submap.json", j.dump(1) + "\n");
  io::write_cloud(dir / "cloud.bin", s.cloud);
}

Submap read_submap(const fs::path& dir, const visual::CameraIntrinsics& intr) {
  Submap s;
  try {
    const auto j = nlohmann::json::parse(io::read_text(dir / "submap.json"));
    s.id = j.at("id").get<std::uint64_t>();
    s.origin_in_world = {io::pose_from_json(j.at("origin")), io::cov_from_json(j.at("origin_cov"))};
    s.travelled_path = j.at("travelled_path").get<double>();
    for (const auto& k : j.at("keyframes")) {
      Keyframe kf;
      kf.id = k.at("id").get<std::uint64_t>();
      kf.frame_index = k.at("frame_index").get<std::size_t>();
      kf.timestamp = k.at("timestamp").get<double>();
      kf.pose_in_submap = {io::pose_from_json(k.at("pose")), io::cov_from_json(k.at("cov"))};
      kf.features = io::features_from_json(k.at("features"), intr);
      s.keyframes.push_back(std::move(kf));
    }
    for (const auto& f : j.at("frames"))
      s.frames.push_back({f.at("frame_index").get<std::size_t>(), f.at("timestamp").get<double>(),
                          io::pose_from_json(f.at("pose"))});
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kIo, "malformed submap " + dir.string() + ": " + ex.what());
  }
  s.cloud = io::read_cloud(dir / "cloud.bin");
  return s;
}

}  // namespace mmslam::submap
