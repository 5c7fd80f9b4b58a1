#include "mmslam/pipeline/session.hpp"

#include <ctime>
#include <memory>
#include <set>
#include <sstream>

#include "mmslam/error.hpp"

namespace mmslam::pipeline {

using geom::Cov6;
using geom::Pose3;
using geom::PoseWithCov;
using graph::NodeId;

namespace {

class CpuTimer {
 public:
  explicit CpuTimer(double& sink) : sink_(sink), start_(std::clock()) {}
  ~CpuTimer() { sink_ += static_cast<double>(std::clock() - start_) / CLOCKS_PER_SEC; }

 private:
  double& sink_;
  std::clock_t start_;
};

Cov6 floored(const Cov6& c, double min_sigma) {
  return geom::nearest_psd(c) + min_sigma * min_sigma * Cov6::Identity();
}

}  // namespace

std::vector<submap::Submap> build_submaps(const sim::Dataset& ds, const submap::BuildConfig& cfg,
                                          std::size_t* dropped) {
  submap::BuildConfig bc = cfg;
  bc.camera_in_body = ds.sensors.camera_in_body();
  submap::SubmapBuilder builder(bc);
  std::vector<submap::Submap> out;
  std::size_t n_dropped = 0;
  for (const auto& f : ds.frames) {
    auto ev = builder.ingest_frame(f.index, f.timestamp, f.vio, f.cloud, f.features, ds.sensors.intrinsics);
    if (ev.dropped) ++n_dropped;
    if (ev.finalized) out.push_back(std::move(*ev.finalized));
  }
  if (auto last = builder.flush()) out.push_back(std::move(*last));
  if (dropped) *dropped = n_dropped;
  return out;
}

SessionResult run_session(const sim::Dataset& ds, const SessionConfig& cfg, const visual::Vocabulary* vocab) {
  cfg.validate();
  SessionResult res;
  auto& stats = res.stats;
  auto& timing = res.timing;
  graph::PoseGraph& g = res.graph;

  submap::BuildConfig bc = cfg.build;
  bc.camera_in_body = ds.sensors.camera_in_body();
  submap::SubmapBuilder builder(bc);
  std::unique_ptr<PairMatcher> matcher;
  if (cfg.matching != Matching::kNone)
    matcher = std::make_unique<PairMatcher>(cfg, vocab, bc.camera_in_body, ds.sensors.intrinsics);

  std::vector<std::unique_ptr<submap::Submap>> submaps;
  CandidateQueue queue(cfg.queue_capacity);
  std::set<std::pair<std::uint64_t, std::uint64_t>> matched_pairs;
  std::set<NodeId> keyframe_nodes;
  std::map<std::uint64_t, const submap::Keyframe*> keyframes_by_id;
  // Pairs that produced nothing, with the submap positions at evaluation.
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::pair<geom::Vec3, geom::Vec3>> failed;
  const bool graph_prior = cfg.prior_source == PriorSource::kGraph;

  auto world_pose = [&](std::uint64_t id) -> PoseWithCov {
    if (!graph_prior) return submaps[id]->origin_in_world;
    return {g.estimate(NodeId::submap(id)), g.marginal_cov(NodeId::submap(id))};
  };
  auto prior_between = [&](std::uint64_t i, std::uint64_t j) -> PoseWithCov {
    if (!graph_prior) return odometry_relative(submaps[i]->origin_in_world, submaps[j]->origin_in_world);
    const PoseWithCov wi = world_pose(i);
    const PoseWithCov wj = world_pose(j);
    return {wj.pose.inverse() * wi.pose, geom::relative_cov(wj, wi)};
  };

  auto optimize = [&] {
    CpuTimer t(timing.optimization);
    const auto st = g.optimize(cfg.graph.optimize);
    ++stats.optimizations;
    stats.final_cost = st.final_cost;
  };

  auto add_keyframe_node = [&](const submap::Submap& s, const submap::Keyframe& kf) {
    const NodeId k = NodeId::keyframe(kf.id);
    if (keyframe_nodes.count(k)) return;
    keyframe_nodes.insert(k);
    g.add_node(k);
    g.add_between(NodeId::submap(s.id), k, {kf.pose_in_submap.pose, floored(kf.pose_in_submap.cov, cfg.graph.min_sigma)});
  };

  auto commit = [&](const MatchRecord& r) {
    const submap::Submap& s0 = *submaps[r.s0];
    const submap::Submap& s1 = *submaps[r.s1];
    if (r.modality == Modality::k3D) {
      g.add_between(NodeId::submap(r.s1), NodeId::submap(r.s0),
                    {r.t_s0_in_s1.pose, floored(r.t_s0_in_s1.cov, cfg.graph.min_sigma)}, cfg.graph.cauchy_scale);
    } else {
      for (const auto& l : r.links) {
        add_keyframe_node(s0, *keyframes_by_id.at(l.kf0));
        add_keyframe_node(s1, *keyframes_by_id.at(l.kf1));
        g.add_between(NodeId::keyframe(l.kf1), NodeId::keyframe(l.kf0),
                      {l.t_k0_in_k1.pose, floored(l.t_k0_in_k1.cov, cfg.graph.min_sigma)}, cfg.graph.cauchy_scale);
        ++stats.keyframe_links;
      }
    }
    (r.modality == Modality::k3D ? stats.records_3d : stats.records_kf)++;
    matched_pairs.insert({r.s0, r.s1});
    res.records.push_back(r);
  };

  auto process_queue = [&](std::uint64_t epoch) {
    while (auto pair = queue.pop()) {
      const submap::Submap& s0 = *submaps[pair->i];
      const submap::Submap& s1 = *submaps[pair->j];
      const PoseWithCov prior = prior_between(pair->i, pair->j);
      PairOutcome out;
      {
        if (uses_3d(cfg.matching)) {
          CpuTimer t(timing.keypoints_3d);
          s0.keypoints3d(cfg.m3d.keypoints);
          s1.keypoints3d(cfg.m3d.keypoints);
        }
        if (uses_3d(cfg.matching)) {
          CpuTimer t(timing.matching_3d);
          if (auto r = matcher->match_3d(s0, s1, prior, out.diag)) out.records.push_back(std::move(*r));
        }
        if (uses_kf(cfg.matching)) {
          CpuTimer t(timing.matching_kf);
          if (auto r = matcher->match_kf(s0, s1, out.diag)) out.records.push_back(std::move(*r));
        }
      }
      ++stats.pairs_evaluated;
      if (!out.diag.stage3d.empty()) ++stats.rejections["3d_" + out.diag.stage3d];
      for (const auto& [stage, n] : out.diag.kf_rejections) stats.rejections["kf_" + stage] += n;
      for (const auto& r : out.records) commit(r);
      if (!out.records.empty()) {
        optimize();
        failed.erase({pair->i, pair->j});
        if (graph_prior) {
          // Retry pairs that failed before the graph moved their submaps.
          std::vector<std::pair<std::uint64_t, std::uint64_t>> retry;
          for (const auto& [ids, pos] : failed) {
            const double di = (g.estimate(NodeId::submap(ids.first)).translation() - pos.first).norm();
            const double dj = (g.estimate(NodeId::submap(ids.second)).translation() - pos.second).norm();
            if (di > cfg.reenqueue_distance || dj > cfg.reenqueue_distance) retry.push_back(ids);
          }
          for (const auto& ids : retry) {
            failed.erase(ids);
            const double score = overlap_score(*submaps[ids.first], *submaps[ids.second], world_pose(ids.first),
                                               world_pose(ids.second), cfg.inflation_sigmas);
            if (score > cfg.overlap_threshold && queue.push({ids.first, ids.second, score, epoch}))
              ++stats.pairs_reenqueued;
          }
        }
      } else {
        failed[{pair->i, pair->j}] = {g.estimate(NodeId::submap(pair->i)).translation(),
                                      g.estimate(NodeId::submap(pair->j)).translation()};
      }
    }
  };

  auto on_submap = [&](submap::Submap&& s) {
    const std::uint64_t id = s.id;
    submaps.push_back(std::make_unique<submap::Submap>(std::move(s)));
    const submap::Submap& cur = *submaps.back();
    for (const auto& kf : cur.keyframes) keyframes_by_id[kf.id] = &kf;
    const NodeId n = NodeId::submap(id);
    if (id == 0) {
      g.add_node(n, cur.origin_in_world.pose);
      g.add_prior(n, {cur.origin_in_world.pose, floored(cur.origin_in_world.cov, cfg.graph.min_sigma)});
    } else {
      const auto& prev = submaps[id - 1]->origin_in_world;
      g.add_node(n);
      g.add_between(NodeId::submap(id - 1), n,
                    {prev.pose.inverse() * cur.origin_in_world.pose,
                     floored(submap::increment_cov(prev, cur.origin_in_world), cfg.graph.min_sigma)});
    }
    if (!matcher) return;
    {
      CpuTimer t(timing.candidate_selection);
      std::vector<const submap::Submap*> older;
      for (const auto& p : submaps)
        if (p->id != id) older.push_back(p.get());
      stats.pairs_enqueued += enqueue_candidates(queue, cur, older, world_pose, cfg.overlap_threshold,
                                                 cfg.inflation_sigmas, id);
    }
    process_queue(id);
  };

  for (const auto& f : ds.frames) {
    submap::FrameEvents ev;
    {
      CpuTimer t(timing.submap_building);
      ev = builder.ingest_frame(f.index, f.timestamp, f.vio, f.cloud, f.features, ds.sensors.intrinsics);
    }
    ++stats.frames;
    if (ev.dropped) ++stats.dropped_frames;
    if (ev.finalized) on_submap(std::move(*ev.finalized));
    res.odometry.push_back({f.timestamp, f.vio.pose});
  }
  if (auto last = builder.flush()) on_submap(std::move(*last));

  stats.n_matches = matched_pairs.size();
  stats.graph_nodes = g.size();
  stats.graph_factors = g.factors().size();
  if (matcher) {
    stats.bow_cache_hits = matcher->bow_cache().hits();
    stats.bow_cache_misses = matcher->bow_cache().misses();
  }
  if (stats.optimizations == 0 && g.size() > 0) stats.final_cost = g.cost();

  for (const auto& p : submaps) {
    const submap::Submap& s = *p;
    SubmapSummary sum;
    sum.id = s.id;
    sum.first_frame = s.frames.front().frame_index;
    sum.last_frame = s.frames.back().frame_index;
    sum.first_timestamp = s.frames.front().timestamp;
    sum.keyframes = s.keyframes.size();
    sum.points = s.cloud.size();
    sum.travelled_path = s.travelled_path;
    sum.origin_odometry = s.origin_in_world;
    sum.origin_estimate = g.estimate(NodeId::submap(s.id));
    res.submaps.push_back(sum);
    for (const auto& f : s.frames) res.trajectory.push_back({f.timestamp, sum.origin_estimate * f.pose_in_submap});
  }
  return res;
}

nlohmann::json record_to_json(const MatchRecord& r) {
  nlohmann::json j;
  j["s0"] = r.s0;
  j["s1"] = r.s1;
  j["modality"] = to_string(r.modality);
  if (r.modality == Modality::k3D) {
    j["t_s0_in_s1"] = io::pose_to_json(r.t_s0_in_s1.pose);
    j["cov"] = io::cov_to_json(r.t_s0_in_s1.cov);
    j["voters"] = r.voters;
    j["fitness"] = r.fitness;
    j["icp_rms"] = r.icp_rms;
    j["mahalanobis"] = r.mahalanobis;
  } else {
    j["links"] = nlohmann::json::array();
    for (const auto& l : r.links) {
      j["links"].push_back({{"kf0", l.kf0},
                            {"kf1", l.kf1},
                            {"t_k0_in_k1", io::pose_to_json(l.t_k0_in_k1.pose)},
                            {"cov", io::cov_to_json(l.t_k0_in_k1.cov)},
                            {"induced_t_s0_in_s1", io::pose_to_json(l.induced)},
                            {"bow_score", l.bow_score},
                            {"descriptor_matches", l.descriptor_matches},
                            {"correspondences", l.correspondences},
                            {"inlier_fraction", l.inlier_fraction},
                            {"depth_fraction", l.depth_fraction},
                            {"refine_iterations", l.refine_iterations}});
    }
  }
  return j;
}

void write_outputs(const std::filesystem::path& dir, const SessionResult& r, const SessionConfig& cfg,
                   bool with_timing) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + dir.string());
  io::write_trajectory(dir / "trajectory.txt", r.trajectory);
  io::write_trajectory(dir / "odometry.txt", r.odometry);

  nlohmann::json subs = nlohmann::json::array();
  for (const auto& s : r.submaps)
    subs.push_back({{"id", s.id},
                    {"first_frame", s.first_frame},
                    {"last_frame", s.last_frame},
                    {"first_timestamp", s.first_timestamp},
                    {"keyframes", s.keyframes},
                    {"points", s.points},
                    {"travelled_path", s.travelled_path},
                    {"origin_odometry", io::pose_to_json(s.origin_odometry.pose)},
                    {"origin_odometry_cov", io::cov_to_json(s.origin_odometry.cov)},
                    {"origin_estimate", io::pose_to_json(s.origin_estimate)}});
  io::write_text(dir / "submaps.json", subs.dump(1) + "\n");

  nlohmann::json recs = nlohmann::json::array();
  for (const auto& m : r.records) recs.push_back(record_to_json(m));
  io::write_text(dir / "matches.json", recs.dump(1) + "\n");

  const auto& s = r.stats;
  nlohmann::json st = {{"matching", to_string(cfg.matching)},
                       {"cauchy_scale", cfg.graph.cauchy_scale},
                       {"frames", s.frames},
                       {"dropped_frames", s.dropped_frames},
                       {"submaps", r.submaps.size()},
                       {"pairs_enqueued", s.pairs_enqueued},
                       {"pairs_evaluated", s.pairs_evaluated},
                       {"pairs_reenqueued", s.pairs_reenqueued},
                       {"n_matches", s.n_matches},
                       {"records_3d", s.records_3d},
                       {"records_kf", s.records_kf},
                       {"keyframe_links", s.keyframe_links},
                       {"optimizations", s.optimizations},
                       {"graph_nodes", s.graph_nodes},
                       {"graph_factors", s.graph_factors},
                       {"final_cost", s.final_cost},
                       {"bow_cache_hits", s.bow_cache_hits},
                       {"bow_cache_misses", s.bow_cache_misses},
                       {"rejections", s.rejections}};
  io::write_text(dir / "stats.json", st.dump(1) + "\n");

  std::ostringstream gs;
  r.graph.save(gs);
  io::write_text(dir / "graph.txt", gs.str());

  if (with_timing) {
    const auto& t = r.timing;
    nlohmann::json tj = {{"submap_building", t.submap_building},   {"candidate_selection", t.candidate_selection},
                         {"keypoints_3d", t.keypoints_3d},         {"matching_3d", t.matching_3d},
                         {"matching_kf", t.matching_kf},           {"optimization", t.optimization}};
    io::write_text(dir / "timing.json", tj.dump(1) + "\n");
  }
}

sim::Metrics evaluate_session(const sim::Dataset& ds, const SessionResult& r) {
  std::map<std::uint64_t, Pose3> est;
  std::map<std::uint64_t, Pose3> gt;
  for (const auto& s : r.submaps) {
    if (s.first_frame >= ds.frames.size() || ds.frames[s.first_frame].index != s.first_frame)
      throw Error(ErrorCode::kPrecondition, "submap frame index not found in dataset");
    est[s.id] = s.origin_estimate;
    gt[s.id] = geom::gravity_aligned(ds.frames[s.first_frame].gt);
  }
  sim::Metrics m = sim::evaluate_submaps(est, gt);
  m.n_matches = r.stats.n_matches;
  return m;
}

visual::Vocabulary train_vocabulary(const sim::Dataset& ds, int k, int levels, std::uint64_t seed,
                                    std::size_t stride) {
  if (stride == 0) throw Error(ErrorCode::kInvalidArgument, "stride must be positive");
  std::vector<std::vector<visual::BinaryDescriptor>> docs;
  for (std::size_t i = 0; i < ds.frames.size(); i += stride) {
    std::vector<visual::BinaryDescriptor> d;
    for (const auto& f : ds.frames[i].features) d.push_back(f.descriptor);
    if (!d.empty()) docs.push_back(std::move(d));
  }
  return visual::Vocabulary::build(docs, k, levels, seed);
}

}  // namespace mmslam::pipeline
