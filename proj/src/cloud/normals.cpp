#include <Eigen/Eigenvalues>

#include "mmslam/cloud/features.hpp"
#include "mmslam/error.hpp"

namespace mmslam::cloud {

NormalEstimate estimate_normals_curvature(const PointCloud& cloud, double radius,
                                          const Vec3& view_dir) {
  if (cloud.empty()) throw Error(ErrorCode::kEmptyInput, "estimate_normals: empty cloud");
  const KdTree index = KdTree::from_points(cloud.points);
  return estimate_normals_curvature(cloud, index, radius, view_dir);
}

NormalEstimate estimate_normals_curvature(const PointCloud& cloud, const KdTree& index,
                                          double radius, const Vec3& view_dir) {
  if (cloud.empty()) throw Error(ErrorCode::kEmptyInput, "estimate_normals: empty cloud");
  if (radius <= 0.0) throw Error(ErrorCode::kInvalidArgument, "estimate_normals: radius must be > 0");

  const Vec3 view = view_dir.normalized();
  NormalEstimate out;
  out.cloud.points = cloud.points;
  out.cloud.colors = cloud.colors;
  out.cloud.normals.assign(cloud.size(), view);
  out.curvature.assign(cloud.size(), 0.0);
  out.valid.assign(cloud.size(), false);

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nbrs = index.radius(cloud.points[i], radius);
    if (nbrs.size() < 3) continue;

    Vec3 mean = Vec3::Zero();
    for (const auto& n : nbrs) mean += cloud.points[n.index];
    mean /= static_cast<double>(nbrs.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& n : nbrs) {
      const Vec3 d = cloud.points[n.index] - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(nbrs.size());

    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const Vec3 ev = es.eigenvalues().cwiseMax(0.0);
    const double sum = ev.sum();
    Vec3 normal = es.eigenvectors().col(0);
    if (normal.dot(view) < 0.0) normal = -normal;
    out.cloud.normals[i] = normal.normalized();
    out.curvature[i] = sum > 0.0 ? ev(0) / sum : 0.0;
    out.valid[i] = true;
  }
  return out;
}

}  // namespace mmslam::cloud
