#include "mmslam/visual/candidates.hpp"

#include <algorithm>
#include <mutex>

namespace mmslam::visual {

void ScoreTracker::update(double s) {
  if (!initialized_) {
    s_max_ = s_min_ = s;
    initialized_ = true;
    return;
  }
  s_max_ = std::max(s_max_, s);
  s_min_ = std::min(s_min_, s);
}

std::vector<KeyframeCandidate> select_candidate_pairs(const std::vector<BowVector>& k0,
                                                      const std::vector<BowVector>& k1,
                                                      ScoreTracker& tracker,
                                                      const CandidateRule& rule) {
  std::vector<KeyframeCandidate> out;
  if (k0.empty()) return out;
  const long half = std::max(0, rule.window / 2);
  std::vector<double> scores(k0.size());

  for (std::size_t j = 0; j < k1.size(); ++j) {
    for (std::size_t i = 0; i < k0.size(); ++i) {
      scores[i] = l1_score(k0[i], k1[j]);
      tracker.update(scores[i]);
    }
    const auto best_it = std::max_element(scores.begin(), scores.end());
    const auto best = static_cast<long>(best_it - scores.begin());
    const double s = *best_it;
    if (s <= 0.0) continue;

    bool window_ok = true;
    const long lo = std::max(0L, best - half);
    const long hi = std::min(static_cast<long>(k0.size()) - 1, best + half);
    for (long i = lo; i <= hi; ++i) {
      if (i == best) continue;
      if (!(scores[static_cast<std::size_t>(i)] > rule.window_ratio * s)) window_ok = false;
    }
    if (!window_ok) continue;
    if (!tracker.accepts(s, rule.global_ratio)) continue;
    out.push_back({static_cast<std::size_t>(best), j, s});
  }
  return out;
}

const BowVector& BowCache::get_or_compute(std::uint64_t key, const std::vector<VisualFeature>& features,
                                          const Vocabulary& vocab) {
  {
    std::shared_lock lock(mutex_);
    if (auto it = table_.find(key); it != table_.end()) {
      ++hits_;
      return it->second;
    }
  }
  BowVector v = bow_transform(features, vocab);
  std::unique_lock lock(mutex_);
  auto [it, inserted] = table_.emplace(key, std::move(v));
  if (inserted) ++misses_;
  else ++hits_;
  return it->second;
}

std::size_t BowCache::size() const {
  std::shared_lock lock(mutex_);
  return table_.size();
}

}  // namespace mmslam::visual
