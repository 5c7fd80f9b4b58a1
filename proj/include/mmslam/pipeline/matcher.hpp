#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmslam/pipeline/config.hpp"
#include "mmslam/visual/vocabulary.hpp"

namespace mmslam::pipeline {

enum class Modality { k3D, kKF };
std::string to_string(Modality m);

// One validated keyframe pair.
struct KeyframeLink {
  std::uint64_t kf0 = 0;  // keyframe ids
  std::uint64_t kf1 = 0;
  geom::PoseWithCov t_k0_in_k1;  // body frames, T_{k0}^{k1}
  geom::Pose3 induced;           // T_{s0}^{s1} composed from the keyframe link
  double bow_score = 0.0;
  std::size_t descriptor_matches = 0;
  std::size_t correspondences = 0;  // 3D-2D pairs with depth in both frames
  double inlier_fraction = 0.0;
  double depth_fraction = 0.0;
  int refine_iterations = 0;
};

// Result of one modality on one submap pair (s0 older, s1 newer).
struct MatchRecord {
  std::uint64_t s0 = 0;
  std::uint64_t s1 = 0;
  Modality modality = Modality::k3D;
  // 3D: T_{s0}^{s1} from ICP.
  geom::PoseWithCov t_s0_in_s1;
  std::size_t voters = 0;
  double fitness = 0.0;
  double icp_rms = 0.0;
  double mahalanobis = 0.0;
  // KF: validated keyframe pairs.
  std::vector<KeyframeLink> links;
};

// Why a modality produced nothing; counts per rejection stage.
struct PairDiagnostics {
  std::string stage3d;  // empty when accepted or not run
  std::size_t keypoints0 = 0, keypoints1 = 0, correspondences3d = 0, hypotheses = 0;
  std::size_t kf_candidates = 0;
  std::map<std::string, std::size_t> kf_rejections;
};

struct PairOutcome {
  std::vector<MatchRecord> records;  // at most one per modality
  PairDiagnostics diag;
};

// Both validation chains for a submap pair. Holds the BoW cache and the
// session-wide score tracker, so pairs must be fed in a fixed order for
// reproducible results.
class PairMatcher {
 public:
  PairMatcher(const SessionConfig& cfg, const visual::Vocabulary* vocab, const geom::Pose3& camera_in_body,
              const visual::CameraIntrinsics& intr);

  // `prior` is the a-priori T_{s0}^{s1} with covariance; it gates 3D
  // hypotheses only.
  PairOutcome process(const submap::Submap& s0, const submap::Submap& s1, const geom::PoseWithCov& prior);

  std::optional<MatchRecord> match_3d(const submap::Submap& s0, const submap::Submap& s1,
                                      const geom::PoseWithCov& prior, PairDiagnostics& diag) const;
  std::optional<MatchRecord> match_kf(const submap::Submap& s0, const submap::Submap& s1,
                                      PairDiagnostics& diag);

  // Validation chain for one keyframe pair; returns nullopt and the failing
  // stage name on rejection.
  std::optional<KeyframeLink> validate_keyframes(const submap::Keyframe& k0, const submap::Keyframe& k1,
                                                 std::string* stage) const;

  const visual::ScoreTracker& tracker() const { return tracker_; }
  const visual::BowCache& bow_cache() const { return cache_; }

 private:
  SessionConfig cfg_;
  const visual::Vocabulary* vocab_;
  geom::Pose3 T_bc_;
  visual::CameraIntrinsics intr_;
  visual::ScoreTracker tracker_;
  visual::BowCache cache_;
};

// A-priori T_{s0}^{s1} from two odometry origins of one dead-reckoned chain:
// the covariance is the odometry noise accumulated between them.
geom::PoseWithCov odometry_relative(const geom::PoseWithCov& o0, const geom::PoseWithCov& o1);

}  // namespace mmslam::pipeline
