#include "mmslam/cloud/kdtree.hpp"

#include <algorithm>
#include <numeric>

#include "mmslam/error.hpp"

namespace mmslam::cloud {

namespace {

bool closer(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
  return a.dist_sq < b.dist_sq || (a.dist_sq == b.dist_sq && a.index < b.index);
}

}  // namespace

KdTree::KdTree(std::vector<double> data, std::size_t dim, std::size_t leaf_size)
    : data_(std::move(data)), dim_(dim), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "kdtree: dimension must be > 0");
  if (data_.size() % dim_ != 0)
    throw Error(ErrorCode::kDimensionMismatch, "kdtree: data size is not a multiple of dim");
  order_.resize(size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!order_.empty()) {
    nodes_.reserve(2 * order_.size() / leaf_size_ + 1);
    build(0, order_.size());
  }
}

KdTree KdTree::from_points(std::span<const geom::Vec3> points) {
  std::vector<double> data;
  data.reserve(points.size() * 3);
  for (const auto& p : points) data.insert(data.end(), {p.x(), p.y(), p.z()});
  return KdTree(std::move(data), 3);
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) return id;

  int best_dim = 0;
  double best_spread = -1.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = data_[order_[i] * dim_ + d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = static_cast<int>(d);
    }
  }
  if (best_spread <= 0.0) return id;  // all points identical

  const std::size_t mid = begin + (end - begin) / 2;
  const auto key = [&](std::size_t idx) { return data_[idx * dim_ + best_dim]; };
  std::nth_element(order_.begin() + static_cast<long>(begin), order_.begin() + static_cast<long>(mid),
                   order_.begin() + static_cast<long>(end),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  const double split = key(order_[mid]);

  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  Node& n = nodes_[id];
  n.split_dim = best_dim;
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

double KdTree::dist_sq(std::size_t idx, std::span<const double> q) const {
  const double* p = data_.data() + idx * dim_;
  double s = 0.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    const double diff = p[d] - q[d];
    s += diff * diff;
  }
  return s;
}

KdTree::Neighbor KdTree::nearest(std::span<const double> query) const {
  auto r = knn(query, 1);
  return r.empty() ? Neighbor{} : r.front();
}

KdTree::Neighbor KdTree::nearest(const geom::Vec3& query) const {
  return nearest(std::span<const double>(query.data(), 3));
}

std::vector<KdTree::Neighbor> KdTree::knn(std::span<const double> query, std::size_t k) const {
  if (query.size() != dim_) throw Error(ErrorCode::kDimensionMismatch, "kdtree: query dimension");
  std::vector<Neighbor> heap;
  if (nodes_.empty() || k == 0) return heap;
  heap.reserve(k + 1);
  search_knn(0, query, k, heap);
  std::sort(heap.begin(), heap.end(), closer);
  return heap;
}

void KdTree::search_knn(std::size_t node_id, std::span<const double> q, std::size_t k,
                        std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.split_dim < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const Neighbor cand{order_[i], dist_sq(order_[i], q)};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double diff = q[static_cast<std::size_t>(node.split_dim)] - node.split;
  const std::size_t near = diff < 0.0 ? node.left : node.right;
  const std::size_t far = diff < 0.0 ? node.right : node.left;
  search_knn(near, q, k, heap);
  // <= keeps equal-distance candidates reachable for the index tie-break.
  if (heap.size() < k || diff * diff <= heap.front().dist_sq) search_knn(far, q, k, heap);
}

std::vector<KdTree::Neighbor> KdTree::radius(std::span<const double> query, double r) const {
  if (query.size() != dim_) throw Error(ErrorCode::kDimensionMismatch, "kdtree: query dimension");
  std::vector<Neighbor> out;
  if (nodes_.empty() || r < 0.0) return out;
  search_radius(0, query, r * r, out);
  std::sort(out.begin(), out.end(),
            [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
  return out;
}

std::vector<KdTree::Neighbor> KdTree::radius(const geom::Vec3& query, double r) const {
  return radius(std::span<const double>(query.data(), 3), r);
}

void KdTree::search_radius(std::size_t node_id, std::span<const double> q, double r2,
                           std::vector<Neighbor>& out) const {
  const Node& node = nodes_[node_id];
  if (node.split_dim < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const double d = dist_sq(order_[i], q);
      if (d <= r2) out.push_back({order_[i], d});
    }
    return;
  }
  const double diff = q[static_cast<std::size_t>(node.split_dim)] - node.split;
  if (diff < 0.0) {
    search_radius(node.left, q, r2, out);
    if (diff * diff <= r2) search_radius(node.right, q, r2, out);
  } else {
    search_radius(node.right, q, r2, out);
    if (diff * diff <= r2) search_radius(node.left, q, r2, out);
  }
}

}  // namespace mmslam::cloud
