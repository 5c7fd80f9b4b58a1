#include "mmslam/pipeline/matcher.hpp"

#include <algorithm>

#include "mmslam/cloud/correspondence.hpp"
#include "mmslam/error.hpp"
#include "mmslam/sim/random.hpp"
#include "mmslam/visual/matching.hpp"

namespace mmslam::pipeline {

using geom::Cov6;
using geom::Pose3;
using geom::PoseWithCov;

std::string to_string(Modality m) { return m == Modality::k3D ? "3d" : "kf"; }

PoseWithCov odometry_relative(const PoseWithCov& o0, const PoseWithCov& o1) {
  const Pose3 rel = o0.pose.inverse() * o1.pose;
  const geom::Mat6 Ad = geom::adjoint(rel);
  const Cov6 c = submap::increment_cov(o0, o1);
  return {rel.inverse(), geom::nearest_psd(Ad * c * Ad.transpose())};
}

PairMatcher::PairMatcher(const SessionConfig& cfg, const visual::Vocabulary* vocab,
                         const Pose3& camera_in_body, const visual::CameraIntrinsics& intr)
    : cfg_(cfg), vocab_(vocab), T_bc_(camera_in_body), intr_(intr) {
  cfg_.validate();
  if (uses_kf(cfg_.matching) && (!vocab_ || vocab_->empty()))
    throw Error(ErrorCode::kConfig, "keyframe matching needs a vocabulary");
}

PairOutcome PairMatcher::process(const submap::Submap& s0, const submap::Submap& s1, const PoseWithCov& prior) {
  PairOutcome out;
  if (uses_3d(cfg_.matching))
    if (auto r = match_3d(s0, s1, prior, out.diag)) out.records.push_back(std::move(*r));
  if (uses_kf(cfg_.matching))
    if (auto r = match_kf(s0, s1, out.diag)) out.records.push_back(std::move(*r));
  return out;
}

std::optional<MatchRecord> PairMatcher::match_3d(const submap::Submap& s0, const submap::Submap& s1,
                                                 const PoseWithCov& prior, PairDiagnostics& diag) const {
  const auto& c = cfg_.m3d;
  const auto& kp0 = s0.keypoints3d(c.keypoints);
  const auto& kp1 = s1.keypoints3d(c.keypoints);
  diag.keypoints0 = kp0.size();
  diag.keypoints1 = kp1.size();
  if (kp0.size() < 3 || kp1.size() < 3) {
    diag.stage3d = "keypoints";
    return std::nullopt;
  }
  const auto corrs = cloud::match_descriptors(kp0, kp1, c.descriptor_max_distance);
  diag.correspondences3d = corrs.size();
  const auto hyps = cloud::hough3d_cluster(kp0, kp1, corrs, cloud::centroid(s0.cloud), c.hough_bin, c.min_votes);
  diag.hypotheses = hyps.size();
  if (hyps.empty()) {
    diag.stage3d = "hough";
    return std::nullopt;
  }

  // Innovation covariance: prior uncertainty plus the constraint's own noise.
  Cov6 meas = Cov6::Zero();
  meas.diagonal() << c.sigma_rot * c.sigma_rot, c.sigma_rot * c.sigma_rot, c.sigma_rot * c.sigma_rot,
      c.sigma_trans * c.sigma_trans, c.sigma_trans * c.sigma_trans, c.sigma_trans * c.sigma_trans;
  const PoseWithCov gate_prior{prior.pose, prior.cov + meas};
  const auto sel = cloud::select_hypothesis(hyps, gate_prior, c.prior_gate);
  if (!sel) {
    diag.stage3d = "prior_gate";
    return std::nullopt;
  }

  cloud::IcpResult icp;
  try {
    icp = cloud::icp_refine(s0.cloud, s1.cloud, sel->transform, c.icp);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoOverlap) throw;
    diag.stage3d = "icp_overlap";
    return std::nullopt;
  }
  if (icp.fitness < c.min_fitness) {
    diag.stage3d = "icp_fitness";
    return std::nullopt;
  }
  const double m2 = cloud::mahalanobis_sq(gate_prior, icp.transform);
  if (m2 > c.prior_gate * c.prior_gate) {
    diag.stage3d = "icp_prior_gate";
    return std::nullopt;
  }

  MatchRecord r;
  r.s0 = s0.id;
  r.s1 = s1.id;
  r.modality = Modality::k3D;
  r.t_s0_in_s1 = {icp.transform, meas};
  r.voters = sel->voters;
  r.fitness = icp.fitness;
  r.icp_rms = icp.rms;
  r.mahalanobis = std::sqrt(m2);
  return r;
}

std::optional<KeyframeLink> PairMatcher::validate_keyframes(const submap::Keyframe& k0, const submap::Keyframe& k1,
                                                            std::string* stage) const {
  const auto& c = cfg_.mkf;
  KeyframeLink link;
  link.kf0 = k0.id;
  link.kf1 = k1.id;

  const auto matches = visual::match_binary(k0.features, k1.features, c.max_hamming);
  link.descriptor_matches = matches.size();
  std::vector<visual::Match3D2D> m32;
  std::vector<std::pair<geom::Vec3, geom::Vec3>> both;
  for (const auto& m : matches) {
    const auto& f0 = k0.features[m.index0];
    const auto& f1 = k1.features[m.index1];
    if (!f0.landmark || !f1.landmark) continue;
    m32.push_back({*f0.landmark, f1.pixel});
    both.emplace_back(*f0.landmark, *f1.landmark);
  }
  link.correspondences = m32.size();

  visual::RansacConfig rc = c.ransac;
  rc.seed = sim::mix_seed(sim::mix_seed(cfg_.seed, k0.id), k1.id);
  const auto pnp = visual::ransac_pnp(m32, intr_, rc);
  link.inlier_fraction = pnp.inlier_fraction;
  if (pnp.status != visual::PnpStatus::kAccepted) {
    *stage = pnp.status == visual::PnpStatus::kInsufficientData ? "pnp_insufficient" : "pnp_inliers";
    return std::nullopt;
  }

  std::vector<std::pair<geom::Vec3, geom::Vec3>> inlier_pairs;
  for (std::size_t i : pnp.inliers) inlier_pairs.push_back(both[i]);
  const auto depth = visual::depth_consistency(inlier_pairs, pnp.pose, c.depth_tol, c.depth_min_frac);
  link.depth_fraction = depth.fraction;
  if (!depth.pass) {
    *stage = "depth";
    return std::nullopt;
  }

  std::vector<visual::Match3D2D> refine_set;
  for (std::size_t i : depth.consistent) refine_set.push_back(m32[pnp.inliers[i]]);
  const auto refined = visual::refine_pose_gn(refine_set, intr_, pnp.pose, c.refine);
  link.refine_iterations = refined.iterations;
  if (!refined.ok) {
    *stage = "refine";
    return std::nullopt;
  }

  // Camera-frame T_{k0}^{k1} into body frames: T_bc T T_bc^-1.
  const geom::Mat6 Ad = geom::adjoint(T_bc_);
  link.t_k0_in_k1 = {T_bc_ * refined.pose.pose * T_bc_.inverse(), Ad * refined.pose.cov * Ad.transpose()};
  if (!visual::gravity_check(link.t_k0_in_k1.pose, c.gravity_max_angle)) {
    *stage = "gravity";
    return std::nullopt;
  }
  link.induced = geom::induced_submap_transform(k1.pose_in_submap.pose, link.t_k0_in_k1.pose,
                                                k0.pose_in_submap.pose);
  if (!visual::gravity_check(link.induced, c.gravity_max_angle)) {
    *stage = "gravity_induced";
    return std::nullopt;
  }
  return link;
}

std::optional<MatchRecord> PairMatcher::match_kf(const submap::Submap& s0, const submap::Submap& s1,
                                                 PairDiagnostics& diag) {
  std::vector<visual::BowVector> b0, b1;
  for (const auto& k : s0.keyframes) b0.push_back(cache_.get_or_compute(k.id, k.features, *vocab_));
  for (const auto& k : s1.keyframes) b1.push_back(cache_.get_or_compute(k.id, k.features, *vocab_));
  auto cands = visual::select_candidate_pairs(b0, b1, tracker_, cfg_.mkf.rule);
  diag.kf_candidates = cands.size();
  std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.score > b.score; });

  MatchRecord r;
  r.s0 = s0.id;
  r.s1 = s1.id;
  r.modality = Modality::kKF;
  for (const auto& cand : cands) {
    if (r.links.size() >= cfg_.mkf.max_matches_per_pair) break;
    std::string stage;
    auto link = validate_keyframes(s0.keyframes[cand.index0], s1.keyframes[cand.index1], &stage);
    if (!link) {
      ++diag.kf_rejections[stage];
      continue;
    }
    link->bow_score = cand.score;
    r.links.push_back(std::move(*link));
  }
  if (r.links.empty()) return std::nullopt;
  return r;
}

}  // namespace mmslam::pipeline
