#include "mmslam/pipeline/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>
#include <vector>

#include "mmslam/error.hpp"
#include "mmslam/io/formats.hpp"

namespace mmslam::pipeline {

std::string to_string(Matching m) {
  switch (m) {
    case Matching::kNone: return "none";
    case Matching::k3D: return "3d";
    case Matching::kKF: return "kf";
    case Matching::kBoth: return "3d+kf";
  }
  return "none";
}

Matching matching_from_string(const std::string& s) {
  if (s == "none") return Matching::kNone;
  if (s == "3d") return Matching::k3D;
  if (s == "kf") return Matching::kKF;
  if (s == "3d+kf" || s == "both") return Matching::kBoth;
  throw Error(ErrorCode::kConfig, "unknown matching mode '" + s + "'");
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw Error(ErrorCode::kConfig, key + ": expected a number, got '" + v + "'");
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw Error(ErrorCode::kConfig, key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::kConfig, key + ": expected true or false, got '" + v + "'");
}

struct Entry {
  std::string key;
  std::function<void(SessionConfig&, const std::string&)> set;
  std::function<std::string(const SessionConfig&)> get;
};

#define MMS_DOUBLE(name, field)                                                              \
  Entry {                                                                                    \
    name, [](SessionConfig& c, const std::string& v) { c.field = parse_double(name, v); },   \
        [](const SessionConfig& c) { return fmt(c.field); }                                  \
  }
#define MMS_UINT(name, field, type)                                                               \
  Entry {                                                                                         \
    name, [](SessionConfig& c, const std::string& v) { c.field = static_cast<type>(parse_uint(name, v)); }, \
        [](const SessionConfig& c) { return std::to_string(c.field); }                            \
  }
#define MMS_BOOL(name, field)                                                             \
  Entry {                                                                                 \
    name, [](SessionConfig& c, const std::string& v) { c.field = parse_bool(name, v); }, \
        [](const SessionConfig& c) { return std::string(c.field ? "true" : "false"); }    \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      Entry{"matching", [](SessionConfig& c, const std::string& v) { c.matching = matching_from_string(v); },
            [](const SessionConfig& c) { return to_string(c.matching); }},
      Entry{"prior_source",
            [](SessionConfig& c, const std::string& v) {
              if (v == "odometry") c.prior_source = PriorSource::kOdometry;
              else if (v == "graph") c.prior_source = PriorSource::kGraph;
              else throw Error(ErrorCode::kConfig, "prior_source: expected odometry or graph");
            },
            [](const SessionConfig& c) {
              return std::string(c.prior_source == PriorSource::kOdometry ? "odometry" : "graph");
            }},
      MMS_UINT("seed", seed, std::uint64_t),
      MMS_DOUBLE("overlap.threshold", overlap_threshold),
      MMS_DOUBLE("overlap.inflation_sigmas", inflation_sigmas),
      MMS_UINT("queue.capacity", queue_capacity, std::size_t),
      MMS_DOUBLE("queue.reenqueue_distance", reenqueue_distance),
      MMS_DOUBLE("submap.max_path_length", build.max_path_length),
      MMS_DOUBLE("submap.max_pose_sigma", build.max_pose_sigma),
      MMS_DOUBLE("submap.kf_translation_thresh", build.kf_translation_thresh),
      MMS_DOUBLE("submap.kf_rotation_thresh", build.kf_rotation_thresh),
      MMS_UINT("submap.bucket_cols", build.bucket_cols, int),
      MMS_UINT("submap.bucket_rows", build.bucket_rows, int),
      MMS_UINT("submap.per_cell_max", build.per_cell_max, std::size_t),
      MMS_DOUBLE("submap.voxel_leaf", build.voxel_leaf),
      MMS_DOUBLE("match3d.normal_radius", m3d.keypoints.normal_radius),
      MMS_DOUBLE("match3d.curvature_quantile", m3d.keypoints.sampling.quantile),
      MMS_DOUBLE("match3d.min_curvature", m3d.keypoints.sampling.min_curvature),
      MMS_DOUBLE("match3d.keypoint_spacing", m3d.keypoints.sampling.min_spacing),
      MMS_DOUBLE("match3d.shot_radius", m3d.keypoints.shot.radius),
      MMS_UINT("match3d.shot_azimuth_bins", m3d.keypoints.shot.azimuth_bins, int),
      MMS_UINT("match3d.shot_elevation_bins", m3d.keypoints.shot.elevation_bins, int),
      MMS_UINT("match3d.shot_radial_bins", m3d.keypoints.shot.radial_bins, int),
      MMS_UINT("match3d.shot_cosine_bins", m3d.keypoints.shot.cosine_bins, int),
      MMS_BOOL("match3d.shot_use_color", m3d.keypoints.shot.use_color),
      MMS_UINT("match3d.shot_color_bins", m3d.keypoints.shot.color_bins, int),
      MMS_DOUBLE("match3d.descriptor_max_distance", m3d.descriptor_max_distance),
      MMS_DOUBLE("match3d.hough_bin", m3d.hough_bin),
      MMS_UINT("match3d.min_votes", m3d.min_votes, std::size_t),
      MMS_DOUBLE("match3d.prior_gate", m3d.prior_gate),
      MMS_DOUBLE("match3d.icp_max_corr_dist", m3d.icp.max_corr_dist),
      MMS_UINT("match3d.icp_max_iters", m3d.icp.max_iters, int),
      MMS_UINT("match3d.icp_max_source_points", m3d.icp.max_source_points, std::size_t),
      MMS_DOUBLE("match3d.min_fitness", m3d.min_fitness),
      MMS_DOUBLE("match3d.sigma_rot", m3d.sigma_rot),
      MMS_DOUBLE("match3d.sigma_trans", m3d.sigma_trans),
      MMS_UINT("matchkf.window", mkf.rule.window, int),
      MMS_DOUBLE("matchkf.window_ratio", mkf.rule.window_ratio),
      MMS_DOUBLE("matchkf.global_ratio", mkf.rule.global_ratio),
      MMS_UINT("matchkf.max_hamming", mkf.max_hamming, int),
      MMS_UINT("matchkf.ransac_iterations", mkf.ransac.iterations, int),
      MMS_DOUBLE("matchkf.ransac_reproj_thresh_px", mkf.ransac.reproj_thresh_px),
      MMS_DOUBLE("matchkf.ransac_min_inlier_frac", mkf.ransac.min_inlier_frac),
      MMS_DOUBLE("matchkf.depth_tol", mkf.depth_tol),
      MMS_DOUBLE("matchkf.depth_min_frac", mkf.depth_min_frac),
      MMS_DOUBLE("matchkf.cauchy_scale_px", mkf.refine.cauchy_scale),
      MMS_DOUBLE("matchkf.pixel_sigma", mkf.refine.pixel_sigma),
      MMS_DOUBLE("matchkf.gravity_max_angle", mkf.gravity_max_angle),
      MMS_UINT("matchkf.max_matches_per_pair", mkf.max_matches_per_pair, std::size_t),
      MMS_DOUBLE("graph.cauchy_scale", graph.cauchy_scale),
      MMS_UINT("graph.max_iters", graph.optimize.max_iters, int),
      MMS_DOUBLE("graph.tol", graph.optimize.tol),
      MMS_BOOL("graph.robust_warm_start", graph.optimize.robust_warm_start),
      MMS_DOUBLE("graph.min_sigma", graph.min_sigma),
  };
  return table;
}

#undef MMS_DOUBLE
#undef MMS_UINT
#undef MMS_BOOL

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void SessionConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfig, m); };
  if (!(overlap_threshold >= 0.0 && overlap_threshold <= 1.0)) fail("overlap.threshold must be in [0, 1]");
  if (!(inflation_sigmas >= 0.0)) fail("overlap.inflation_sigmas must be >= 0");
  if (queue_capacity == 0) fail("queue.capacity must be > 0");
  build.validate();
  m3d.keypoints.shot.validate();
  if (!(m3d.keypoints.normal_radius > 0 && m3d.hough_bin > 0 && m3d.prior_gate > 0 &&
        m3d.icp.max_corr_dist > 0 && m3d.icp.max_iters > 0 && m3d.sigma_rot > 0 && m3d.sigma_trans > 0 &&
        m3d.keypoints.sampling.quantile >= 0 && m3d.keypoints.sampling.quantile <= 1 &&
        m3d.keypoints.sampling.min_spacing >= 0))
    fail("invalid match3d settings");
  if (!(mkf.rule.window >= 1 && mkf.max_hamming >= 0 && mkf.ransac.iterations > 0 &&
        mkf.ransac.reproj_thresh_px > 0 && mkf.depth_tol > 0 && mkf.refine.cauchy_scale > 0 &&
        mkf.refine.pixel_sigma > 0 && mkf.gravity_max_angle >= 0 && mkf.max_matches_per_pair >= 1))
    fail("invalid matchkf settings");
  if (!(graph.cauchy_scale > 0 && graph.optimize.max_iters > 0 && graph.min_sigma > 0))
    fail("invalid graph settings");
}

SessionConfig parse_config(const std::string& text, SessionConfig cfg) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::kConfig, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& table = entries();
    auto it = std::find_if(table.begin(), table.end(), [&](const Entry& e) { return e.key == key; });
    if (it == table.end())
      throw Error(ErrorCode::kConfig, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

SessionConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  return parse_config(text);
}

std::string dump_config(const SessionConfig& cfg) {
  std::string out;
  for (const auto& e : entries()) out += e.key + " = " + e.get(cfg) + "\n";
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

}  // namespace mmslam::pipeline
