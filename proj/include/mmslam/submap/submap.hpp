#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mmslam/cloud/features.hpp"
#include "mmslam/cloud/shot.hpp"
#include "mmslam/visual/types.hpp"

namespace mmslam::submap {

using geom::Pose3;
using geom::PoseWithCov;

struct Keyframe {
  std::uint64_t id = 0;            // unique across the session
  std::size_t frame_index = 0;
  double timestamp = 0.0;
  PoseWithCov pose_in_submap;      // body pose T_k^s and Sigma_k^s
  std::vector<visual::VisualFeature> features;
};

// Per-frame body pose inside the submap, kept for trajectory stitching.
struct FrameStamp {
  std::size_t frame_index = 0;
  double timestamp = 0.0;
  Pose3 pose_in_submap;
};

struct Keypoint3DConfig {
  double normal_radius = 0.35;
  cloud::KeypointSampling sampling{0.9, 0.02, 0.3};
  cloud::ShotConfig shot{1.2};
};

class Submap {
 public:
  std::uint64_t id = 0;
  PoseWithCov origin_in_world;     // odometry estimate, gravity aligned
  cloud::PointCloud cloud;         // submap frame
  std::vector<Keyframe> keyframes;
  std::vector<FrameStamp> frames;
  double travelled_path = 0.0;

  // Keypoints and descriptors, extracted on first use and cached; later
  // calls return the cached set whatever config they pass.
  const std::vector<cloud::Keypoint3D>& keypoints3d(const Keypoint3DConfig& cfg) const;
  bool keypoints_cached() const;
  int keypoint_extractions() const;

 private:
  struct Cache {
    std::once_flag once;
    std::vector<cloud::Keypoint3D> keypoints;
    int extractions = 0;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

std::vector<cloud::Keypoint3D> extract_keypoints3d(const cloud::PointCloud& cloud,
                                                   const Keypoint3DConfig& cfg);

struct BuildConfig {
  double max_path_length = 7.0;       // m
  double max_pose_sigma = 1.0;        // m, largest positional sigma since the origin
  double kf_translation_thresh = 0.5; // m
  double kf_rotation_thresh = 0.2618; // rad
  int bucket_cols = 8;
  int bucket_rows = 6;
  std::size_t per_cell_max = 5;
  double voxel_leaf = 0.05;           // m, 0 disables
  Pose3 camera_in_body;               // T_b^c: camera frame -> body frame

  void validate() const;
};

// Features sorted into a cols x rows image grid; each cell keeps its
// per_cell_max highest responses. Output is cell-major, response-descending.
std::vector<visual::VisualFeature> bucket_features(const std::vector<visual::VisualFeature>& features,
                                                   const visual::CameraIntrinsics& intr, int cols,
                                                   int rows, std::size_t per_cell_max);

struct FrameEvents {
  bool dropped = false;
  bool keyframe_created = false;
  bool submap_finalized = false;
  std::optional<Submap> finalized;  // set together with submap_finalized
  std::string diagnostic;
};

// Single-writer submap builder. A frame whose travelled path or positional
// uncertainty since the current origin reaches its limit closes the current
// submap; that frame then becomes the origin of the next one.
class SubmapBuilder {
 public:
  explicit SubmapBuilder(BuildConfig cfg);

  // `cloud` is in the body frame; feature landmarks are in the camera frame.
  FrameEvents ingest_frame(std::size_t frame_index, double timestamp, const PoseWithCov& vio,
                           const cloud::PointCloud& cloud,
                           const std::vector<visual::VisualFeature>& features,
                           const visual::CameraIntrinsics& intr);

  // Closes the open submap, if any.
  std::optional<Submap> flush();

  const BuildConfig& config() const { return cfg_; }
  std::size_t finalized_count() const { return next_submap_id_; }

 private:
  void start_submap(const PoseWithCov& vio);
  Submap finalize();

  BuildConfig cfg_;
  std::optional<Submap> open_;
  Pose3 origin_vio_;
  PoseWithCov last_vio_;
  PoseWithCov rel_;                  // pose since origin, covariance propagated per frame
  std::optional<Pose3> last_kf_vio_;
  std::uint64_t next_submap_id_ = 0;
  std::uint64_t next_keyframe_id_ = 0;
};

// Odometry increment covariance between consecutive absolute estimates,
// Sigma_b - Ad(d^-1) Sigma_a Ad(d^-1)^T projected onto the PSD cone.
geom::Cov6 increment_cov(const PoseWithCov& a, const PoseWithCov& b);

// Submap directory: submap.json (origin, keyframes with their feature
// tables, frame stamps) and cloud.bin in the dataset cloud format.
void write_submap(const std::filesystem::path& dir, const Submap& s);
Submap read_submap(const std::filesystem::path& dir, const visual::CameraIntrinsics& intr);

}  // namespace mmslam::submap
