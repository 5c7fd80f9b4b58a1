#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "mmslam/geom/pose.hpp"

namespace mmslam::cloud {

// Exact kd-tree over points of arbitrary (fixed) dimension. Queries return
// the same answer as a linear scan, with ties broken toward the smaller index.
class KdTree {
 public:
  struct Neighbor {
    std::size_t index = std::numeric_limits<std::size_t>::max();
    double dist_sq = std::numeric_limits<double>::infinity();
  };

  KdTree() = default;
  // `data` is row-major, `dim` values per point.
  KdTree(std::vector<double> data, std::size_t dim, std::size_t leaf_size = 8);

  static KdTree from_points(std::span<const geom::Vec3> points);

  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return size() == 0; }

  Neighbor nearest(std::span<const double> query) const;
  Neighbor nearest(const geom::Vec3& query) const;

  // Up to k neighbors, ascending by (distance, index).
  std::vector<Neighbor> knn(std::span<const double> query, std::size_t k) const;

  // All points with distance <= radius, ascending by index.
  std::vector<Neighbor> radius(std::span<const double> query, double radius) const;
  std::vector<Neighbor> radius(const geom::Vec3& query, double radius) const;

 private:
  struct Node {
    std::size_t begin = 0, end = 0;  // range into order_
    int split_dim = -1;              // -1 for leaves
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  double dist_sq(std::size_t idx, std::span<const double> q) const;
  void search_knn(std::size_t node, std::span<const double> q, std::size_t k,
                  std::vector<Neighbor>& heap) const;
  void search_radius(std::size_t node, std::span<const double> q, double r2,
                     std::vector<Neighbor>& out) const;

  std::vector<double> data_;
  std::size_t dim_ = 0;
  std::size_t leaf_size_ = 8;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace mmslam::cloud
