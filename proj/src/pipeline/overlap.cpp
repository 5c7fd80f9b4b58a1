#include "mmslam/pipeline/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mmslam::pipeline {

using geom::Vec3;

cloud::Aabb world_box(const cloud::PointCloud& cloud_in_submap, const geom::Pose3& world) {
  cloud::Aabb box;
  if (cloud_in_submap.empty()) {
    box.min = box.max = world.translation();
    return box;
  }
  box.min = Vec3::Constant(std::numeric_limits<double>::infinity());
  box.max = -box.min;
  for (const auto& p : cloud_in_submap.points) {
    const Vec3 q = world * p;
    box.min = box.min.cwiseMin(q);
    box.max = box.max.cwiseMax(q);
  }
  return box;
}

cloud::Aabb inflate(const cloud::Aabb& box, const geom::PoseWithCov& world, double sigmas) {
  const Vec3 sd = geom::world_position_cov(world).diagonal().cwiseMax(0.0).cwiseSqrt();
  return {box.min - sigmas * sd, box.max + sigmas * sd};
}

double overlap_score(const cloud::Aabb& a, const cloud::Aabb& b) {
  constexpr double kMinExtent = 1e-3;
  auto vol = [&](const Vec3& lo, const Vec3& hi) {
    const Vec3 e = (hi - lo).cwiseMax(kMinExtent);
    return e.prod();
  };
  const Vec3 lo = a.min.cwiseMax(b.min);
  const Vec3 hi = a.max.cwiseMin(b.max);
  if ((hi.array() < lo.array()).any()) return 0.0;
  const double inter = vol(lo, hi);
  const double smaller = std::min(vol(a.min, a.max), vol(b.min, b.max));
  return std::clamp(inter / smaller, 0.0, 1.0);
}

double overlap_score(const submap::Submap& si, const submap::Submap& sj, const geom::PoseWithCov& wi,
                     const geom::PoseWithCov& wj, double sigmas) {
  return overlap_score(inflate(world_box(si.cloud, wi.pose), wi, sigmas),
                       inflate(world_box(sj.cloud, wj.pose), wj, sigmas));
}

bool CandidateQueue::Order::operator()(const CandidatePair& a, const CandidatePair& b) const {
  if (a.score != b.score) return a.score > b.score;
  if (a.epoch != b.epoch) return a.epoch < b.epoch;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

bool CandidateQueue::pending(std::uint64_t i, std::uint64_t j) const {
  return std::any_of(items_.begin(), items_.end(),
                     [&](const CandidatePair& p) { return p.i == i && p.j == j; });
}

bool CandidateQueue::push(const CandidatePair& p) {
  if (pending(p.i, p.j)) return false;
  items_.insert(p);
  if (items_.size() > capacity_) {
    const bool self = *std::prev(items_.end()) == p;
    items_.erase(std::prev(items_.end()));
    ++dropped_;
    return !self;
  }
  return true;
}

std::optional<CandidatePair> CandidateQueue::pop() {
  if (items_.empty()) return std::nullopt;
  CandidatePair p = *items_.begin();
  items_.erase(items_.begin());
  return p;
}

std::size_t enqueue_candidates(CandidateQueue& queue, const submap::Submap& newest,
                               const std::vector<const submap::Submap*>& older,
                               const std::function<geom::PoseWithCov(std::uint64_t)>& world_pose,
                               double threshold, double sigmas, std::uint64_t epoch) {
  std::size_t n = 0;
  const auto wn = world_pose(newest.id);
  for (const submap::Submap* s : older) {
    if (s->id == newest.id || s->id + 1 == newest.id || newest.id + 1 == s->id) continue;
    const double score = overlap_score(*s, newest, world_pose(s->id), wn, sigmas);
    if (score <= threshold) continue;
    const auto lo = std::min(s->id, newest.id);
    const auto hi = std::max(s->id, newest.id);
    if (queue.push({lo, hi, score, epoch})) ++n;
  }
  return n;
}

}  // namespace mmslam::pipeline
