#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mmslam/cloud/icp.hpp"
#include "mmslam/graph/pose_graph.hpp"
#include "mmslam/submap/submap.hpp"
#include "mmslam/visual/candidates.hpp"
#include "mmslam/visual/pose_estimation.hpp"

namespace mmslam::pipeline {

// Ablation arms.
enum class Matching { kNone, k3D, kKF, kBoth };

std::string to_string(Matching m);
Matching matching_from_string(const std::string& s);  // none | 3d | kf | 3d+kf
inline bool uses_3d(Matching m) { return m == Matching::k3D || m == Matching::kBoth; }
inline bool uses_kf(Matching m) { return m == Matching::kKF || m == Matching::kBoth; }

// Where candidate selection and the 3D prior gate take submap poses from.
// Odometry keeps the two modalities independent of each other.
enum class PriorSource { kOdometry, kGraph };

struct Match3DConfig {
  submap::Keypoint3DConfig keypoints;
  double descriptor_max_distance = 0.6;
  double hough_bin = 1.0;           // m
  std::size_t min_votes = 5;
  double prior_gate = 3.0;          // Mahalanobis distance
  cloud::IcpConfig icp{0.3, 50, 1e-6, 4000};
  double min_fitness = 0.5;
  double sigma_rot = 0.01;          // rad, constraint covariance
  double sigma_trans = 0.05;        // m
};

struct MatchKFConfig {
  visual::CandidateRule rule;
  int max_hamming = 50;
  visual::RansacConfig ransac;
  double depth_tol = 0.1;           // m
  double depth_min_frac = 0.75;
  visual::RefineConfig refine;
  double gravity_max_angle = 0.05235987755982989;  // 3 deg
  std::size_t max_matches_per_pair = 3;
};

struct GraphConfig {
  double cauchy_scale = 1.0;
  graph::OptimizeConfig optimize;
  double min_sigma = 1e-4;          // floor on factor standard deviations
};

struct SessionConfig {
  Matching matching = Matching::kBoth;
  double overlap_threshold = 0.3;
  double inflation_sigmas = 3.0;
  std::size_t queue_capacity = 256;
  PriorSource prior_source = PriorSource::kOdometry;
  double reenqueue_distance = 1.0;  // m, graph prior source only
  submap::BuildConfig build;
  Match3DConfig m3d;
  MatchKFConfig mkf;
  GraphConfig graph;
  std::uint64_t seed = 1;

  void validate() const;  // throws Error(kConfig)
};

// Key-value text, one `key = value` per line, '#' starts a comment.
// Unknown keys and malformed values throw Error(kConfig). See
// config_keys() for the accepted keys.
SessionConfig parse_config(const std::string& text, SessionConfig base = {});
SessionConfig load_config(const std::filesystem::path& path);
std::string dump_config(const SessionConfig& cfg);  // every key, parseable
const std::vector<std::string>& config_keys();

}  // namespace mmslam::pipeline
