#include "mmslam/cloud/shot.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "mmslam/error.hpp"

namespace mmslam::cloud {

namespace {

int bin_of(double unit_value, int bins) {
  const int b = static_cast<int>(std::floor(unit_value * bins));
  return std::clamp(b, 0, bins - 1);
}

}  // namespace

void ShotConfig::validate() const {
  if (radius <= 0.0) throw Error(ErrorCode::kConfig, "shot: radius must be > 0");
  if (azimuth_bins < 1 || elevation_bins < 1 || radial_bins < 1 || cosine_bins < 1 ||
      color_bins < 1)
    throw Error(ErrorCode::kConfig, "shot: bin counts must be >= 1");
}

int ShotConfig::dimension() const {
  int d = spatial_cells() * cosine_bins;
  if (use_color) d += spatial_cells() * 3 * color_bins;
  return d;
}

Mat3 local_reference_frame(const PointCloud& cloud, const std::vector<KdTree::Neighbor>& nbrs,
                           const Vec3& center, double radius) {
  Mat3 M = Mat3::Zero();
  double wsum = 0.0;
  for (const auto& n : nbrs) {
    const Vec3 d = cloud.points[n.index] - center;
    const double w = radius - std::sqrt(n.dist_sq);
    M += w * d * d.transpose();
    wsum += w;
  }
  if (wsum > 0.0) M /= wsum;

  Eigen::SelfAdjointEigenSolver<Mat3> es(M);
  Vec3 x = es.eigenvectors().col(2);
  Vec3 z = es.eigenvectors().col(0);

  const auto disambiguate = [&](Vec3& axis) {
    long balance = 0;
    for (const auto& n : nbrs) {
      const double s = (cloud.points[n.index] - center).dot(axis);
      if (s > 0.0) ++balance;
      else if (s < 0.0) --balance;
    }
    if (balance < 0) axis = -axis;
  };
  disambiguate(x);
  disambiguate(z);

  Mat3 lrf;
  lrf.col(0) = x.normalized();
  lrf.col(2) = z.normalized();
  lrf.col(1) = lrf.col(2).cross(lrf.col(0)).normalized();
  lrf.col(0) = lrf.col(1).cross(lrf.col(2)).normalized();
  return lrf;
}

Keypoint3D compute_descriptor(const PointCloud& cloud, const KdTree& index,
                              const Vec3& position, const ShotConfig& cfg) {
  cfg.validate();
  if (!cloud.has_normals())
    throw Error(ErrorCode::kInvalidArgument, "compute_descriptor: cloud has no normals");
  if (cfg.use_color && !cloud.has_colors())
    throw Error(ErrorCode::kInvalidArgument, "compute_descriptor: color requested on plain cloud");

  Keypoint3D kp;
  kp.position = position;
  kp.descriptor = Eigen::VectorXd::Zero(cfg.dimension());

  const auto nbrs = index.radius(position, cfg.radius);
  if (nbrs.size() < std::max<std::size_t>(cfg.min_support, 3)) return kp;

  kp.lrf = local_reference_frame(cloud, nbrs, position, cfg.radius);
  const Vec3 z_axis = kp.lrf.col(2);
  const int cells = cfg.spatial_cells();
  const int shape_dim = cells * cfg.cosine_bins;

  for (const auto& n : nbrs) {
    const Vec3 q = kp.lrf.transpose() * (cloud.points[n.index] - position);
    const double r = q.norm();
    double azimuth = 0.0, elevation = 0.0;
    if (r > 1e-12) {
      azimuth = std::atan2(q.y(), q.x());
      elevation = std::asin(std::clamp(q.z() / r, -1.0, 1.0));
    }
    const int a = bin_of((azimuth + M_PI) / (2.0 * M_PI), cfg.azimuth_bins);
    const int e = bin_of((elevation + M_PI / 2.0) / M_PI, cfg.elevation_bins);
    const int rb = bin_of(r / cfg.radius, cfg.radial_bins);
    const int cell = (a * cfg.elevation_bins + e) * cfg.radial_bins + rb;

    const double c = std::clamp(z_axis.dot(cloud.normals[n.index]), -1.0, 1.0);
    kp.descriptor(cell * cfg.cosine_bins + bin_of((c + 1.0) / 2.0, cfg.cosine_bins)) += 1.0;

    if (cfg.use_color) {
      const Vec3& rgb = cloud.colors[n.index];
      for (int ch = 0; ch < 3; ++ch) {
        const int off = shape_dim + (cell * 3 + ch) * cfg.color_bins;
        kp.descriptor(off + bin_of(std::clamp(rgb(ch), 0.0, 1.0), cfg.color_bins)) += 1.0;
      }
    }
  }

  auto shape = kp.descriptor.head(shape_dim);
  if (shape.norm() > 0.0) shape.normalize();
  if (cfg.use_color) {
    auto color = kp.descriptor.tail(kp.descriptor.size() - shape_dim);
    if (color.norm() > 0.0) color.normalize();
  }
  const double norm = kp.descriptor.norm();
  if (norm <= 0.0) return kp;
  kp.descriptor /= norm;
  kp.usable = true;
  return kp;
}

std::vector<Keypoint3D> compute_descriptors(const PointCloud& cloud, const KdTree& index,
                                            const std::vector<Vec3>& positions,
                                            const ShotConfig& cfg) {
  std::vector<Keypoint3D> out;
  out.reserve(positions.size());
  for (const auto& p : positions) out.push_back(compute_descriptor(cloud, index, p, cfg));
  return out;
}

}  // namespace mmslam::cloud
