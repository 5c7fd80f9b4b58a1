#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mmslam/graph/pose_graph.hpp"
#include "mmslam/pipeline/matcher.hpp"
#include "mmslam/pipeline/overlap.hpp"
#include "mmslam/sim/dataset.hpp"
#include "mmslam/sim/metrics.hpp"

namespace mmslam::pipeline {

struct SubmapSummary {
  std::uint64_t id = 0;
  std::size_t first_frame = 0;
  std::size_t last_frame = 0;
  double first_timestamp = 0.0;
  std::size_t keyframes = 0;
  std::size_t points = 0;
  double travelled_path = 0.0;
  geom::PoseWithCov origin_odometry;
  geom::Pose3 origin_estimate;  // after the final optimization
};

// CPU seconds per stage; not part of the deterministic outputs.
struct StageTiming {
  double submap_building = 0.0;
  double candidate_selection = 0.0;
  double keypoints_3d = 0.0;
  double matching_3d = 0.0;
  double matching_kf = 0.0;
  double optimization = 0.0;
};

struct SessionStats {
  std::size_t frames = 0;
  std::size_t dropped_frames = 0;
  std::size_t pairs_enqueued = 0;
  std::size_t pairs_evaluated = 0;
  std::size_t pairs_reenqueued = 0;
  std::size_t n_matches = 0;  // distinct submap pairs with at least one record
  std::size_t records_3d = 0;
  std::size_t records_kf = 0;
  std::size_t keyframe_links = 0;
  std::size_t optimizations = 0;
  std::size_t graph_nodes = 0;
  std::size_t graph_factors = 0;
  double final_cost = 0.0;
  std::size_t bow_cache_hits = 0;
  std::size_t bow_cache_misses = 0;
  std::map<std::string, std::size_t> rejections;
};

struct SessionResult {
  std::vector<SubmapSummary> submaps;
  std::vector<io::StampedPose> trajectory;  // stitched from the final submap estimates
  std::vector<io::StampedPose> odometry;
  std::vector<MatchRecord> records;         // in commit order
  SessionStats stats;
  StageTiming timing;
  graph::PoseGraph graph;
};

// Whole session over a dataset. `vocab` may be null unless keyframe matching
// is enabled.
SessionResult run_session(const sim::Dataset& ds, const SessionConfig& cfg,
                          const visual::Vocabulary* vocab);

// Only the submap builder over the dataset, no matching or graph.
std::vector<submap::Submap> build_submaps(const sim::Dataset& ds, const submap::BuildConfig& cfg,
                                          std::size_t* dropped = nullptr);

// Writes trajectory.txt, odometry.txt, submaps.json, matches.json,
// stats.json and graph.txt into `dir`; timing.json only when asked, since
// CPU times differ between runs.
void write_outputs(const std::filesystem::path& dir, const SessionResult& r, const SessionConfig& cfg,
                   bool with_timing);

nlohmann::json record_to_json(const MatchRecord& r);

// Submap origins against ground truth: the reference origin of a submap is the
// gravity-aligned true pose of its first frame. n_matches is copied from the
// session stats.
sim::Metrics evaluate_session(const sim::Dataset& ds, const SessionResult& r);

// Vocabulary trained on the descriptors of every `stride`-th frame, one
// document per frame.
visual::Vocabulary train_vocabulary(const sim::Dataset& ds, int k, int levels, std::uint64_t seed,
                                    std::size_t stride = 4);

}  // namespace mmslam::pipeline
