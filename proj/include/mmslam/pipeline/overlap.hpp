#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "mmslam/submap/submap.hpp"

namespace mmslam::pipeline {

// World-frame AABB of a submap cloud placed at `world`.
cloud::Aabb world_box(const cloud::PointCloud& cloud_in_submap, const geom::Pose3& world);

// Grows every side by `sigmas` standard deviations of the world positional
// marginal along that axis.
cloud::Aabb inflate(const cloud::Aabb& box, const geom::PoseWithCov& world, double sigmas);

// Intersection volume over the smaller box volume. Extents are floored at
// 1 mm so flat boxes still have a volume.
double overlap_score(const cloud::Aabb& a, const cloud::Aabb& b);

double overlap_score(const submap::Submap& si, const submap::Submap& sj, const geom::PoseWithCov& wi,
                     const geom::PoseWithCov& wj, double sigmas = 3.0);

struct CandidatePair {
  std::uint64_t i = 0;  // older submap, i < j
  std::uint64_t j = 0;
  double score = 0.0;
  std::uint64_t epoch = 0;

  bool operator==(const CandidatePair&) const = default;
};

// Pops in non-increasing score; ties go to the older epoch, then the smaller
// (i, j). A pair already waiting is not queued twice. When full, the lowest
// priority entry is dropped.
class CandidateQueue {
 public:
  explicit CandidateQueue(std::size_t capacity = 256) : capacity_(capacity) {}

  bool push(const CandidatePair& p);
  std::optional<CandidatePair> pop();
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  bool pending(std::uint64_t i, std::uint64_t j) const;
  std::size_t dropped() const { return dropped_; }

 private:
  struct Order {
    bool operator()(const CandidatePair& a, const CandidatePair& b) const;
  };
  std::size_t capacity_;
  std::set<CandidatePair, Order> items_;
  std::size_t dropped_ = 0;
};

// Scores `newest` against every older submap except its predecessor and
// queues those above `threshold`. Returns the number queued.
std::size_t enqueue_candidates(CandidateQueue& queue, const submap::Submap& newest,
                               const std::vector<const submap::Submap*>& older,
                               const std::function<geom::PoseWithCov(std::uint64_t)>& world_pose,
                               double threshold, double sigmas, std::uint64_t epoch);

}  // namespace mmslam::pipeline
