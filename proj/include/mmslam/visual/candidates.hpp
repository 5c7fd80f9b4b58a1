#pragma once

#include <atomic>
#include <cstdint>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "mmslam/visual/vocabulary.hpp"

namespace mmslam::visual {

// Running extremes of every BoW score observed in a session.
class ScoreTracker {
 public:
  void update(double s);
  bool initialized() const { return initialized_; }
  double s_max() const { return s_max_; }
  double s_min() const { return s_min_; }

  // 0.6 * (s_max - s_min) + s_min
  double threshold(double ratio = 0.6) const { return ratio * (s_max_ - s_min_) + s_min_; }
  // Strict inequality; nothing passes before the first update.
  bool accepts(double s, double ratio = 0.6) const { return initialized_ && s > threshold(ratio); }

 private:
  bool initialized_ = false;
  double s_max_ = 0.0;
  double s_min_ = 0.0;
};

struct CandidateRule {
  int window = 3;             // keyframes centered on the best match, truncated at the ends
  double window_ratio = 0.6;  // every window score must exceed ratio * best score
  double global_ratio = 0.6;  // global gate against the tracker extremes
};

struct KeyframeCandidate {
  std::size_t index0 = 0;  // into K0
  std::size_t index1 = 0;  // into K1
  double score = 0.0;

  bool operator==(const KeyframeCandidate&) const = default;
};

// For every keyframe of K1 (in order): score it against all of K0, feed the
// scores to the tracker, then accept its best K0 match only if the window
// rule and the global gate both pass.
std::vector<KeyframeCandidate> select_candidate_pairs(const std::vector<BowVector>& k0,
                                                      const std::vector<BowVector>& k1,
                                                      ScoreTracker& tracker,
                                                      const CandidateRule& rule = {});

// Per-keyframe BoW cache shared by candidate evaluations. Reads take a shared
// lock; the first computation for a key takes the exclusive lock.
class BowCache {
 public:
  const BowVector& get_or_compute(std::uint64_t key, const std::vector<VisualFeature>& features,
                                  const Vocabulary& vocab);
  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::uint64_t, BowVector> table_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace mmslam::visual
