#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mmslam/visual/pose_estimation.hpp"

namespace mmslam::visual {

Vec2 reprojection_residual(const Pose3& T, const Match3D2D& m, const CameraIntrinsics& intr) {
  return intr.project(T * m.landmark) - m.pixel;
}

Eigen::Matrix<double, 2, 6> reprojection_jacobian(const Pose3& T, const Match3D2D& m,
                                                  const CameraIntrinsics& intr) {
  const geom::Mat3 R = T.rotation_matrix();
  const Vec3 p = T * m.landmark;
  const double iz = 1.0 / p.z();
  Eigen::Matrix<double, 2, 3> dpi;
  dpi << intr.fx * iz, 0.0, -intr.fx * p.x() * iz * iz,
         0.0, intr.fy * iz, -intr.fy * p.y() * iz * iz;
  Eigen::Matrix<double, 3, 6> dp;
  dp.leftCols<3>() = -R * geom::skew(m.landmark);
  dp.rightCols<3>() = R;
  return dpi * dp;
}

double cauchy_rho(double r, double c) { return 0.5 * c * c * std::log1p((r * r) / (c * c)); }

namespace {

bool all_in_front(std::span<const Match3D2D> pairs, const Pose3& T) {
  for (const auto& m : pairs)
    if (!((T * m.landmark).z() > 1e-9)) return false;
  return true;
}

double robust_cost(std::span<const Match3D2D> pairs, const CameraIntrinsics& intr, const Pose3& T,
                   double c) {
  double cost = 0.0;
  for (const auto& m : pairs) cost += cauchy_rho(reprojection_residual(T, m, intr).norm(), c);
  return cost;
}

geom::Mat6 weighted_normal_equations(std::span<const Match3D2D> pairs, const CameraIntrinsics& intr,
                                     const Pose3& T, double c, geom::Vec6* g) {
  geom::Mat6 H = geom::Mat6::Zero();
  if (g) g->setZero();
  for (const auto& m : pairs) {
    const Vec2 e = reprojection_residual(T, m, intr);
    const double w = 1.0 / (1.0 + e.squaredNorm() / (c * c));
    const auto J = reprojection_jacobian(T, m, intr);
    H.noalias() += w * J.transpose() * J;
    if (g) g->noalias() += w * J.transpose() * e;
  }
  return H;
}

bool well_conditioned(const geom::Mat6& H) {
  Eigen::SelfAdjointEigenSolver<geom::Mat6> es(H);
  const double hi = es.eigenvalues().maxCoeff();
  const double lo = es.eigenvalues().minCoeff();
  return hi > 0.0 && lo > 1e-12 * hi;
}

}  // namespace

RefineResult refine_pose_gn(std::span<const Match3D2D> pairs, const CameraIntrinsics& intr,
                            const Pose3& init, const RefineConfig& cfg) {
  RefineResult out;
  out.pose.pose = init;
  if (pairs.size() < cfg.min_pairs || !all_in_front(pairs, init)) return out;

  const double c = cfg.cauchy_scale;
  Pose3 T = init;
  double cost = robust_cost(pairs, intr, T, c);
  out.initial_cost = cost;

  for (int it = 0; it < cfg.max_iters; ++it) {
    geom::Vec6 g;
    const geom::Mat6 H = weighted_normal_equations(pairs, intr, T, c, &g);
    if (!well_conditioned(H)) return out;
    const geom::Vec6 delta = -H.ldlt().solve(g);
    if (!delta.allFinite()) return out;
    out.iterations = it + 1;

    // Backtrack until the robust cost does not increase.
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k < 30; ++k, alpha *= 0.5) {
      const Pose3 cand = T.retract(alpha * delta);
      if (!all_in_front(pairs, cand)) continue;
      const double cand_cost = robust_cost(pairs, intr, cand, c);
      if (cand_cost <= cost) {
        T = cand;
        cost = cand_cost;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    out.cost_history.push_back(cost);
    if ((alpha * delta).norm() < cfg.step_tol) break;
  }

  const geom::Mat6 H = weighted_normal_equations(pairs, intr, T, c, nullptr);
  if (!well_conditioned(H)) return out;
  geom::Cov6 cov = cfg.pixel_sigma * cfg.pixel_sigma * H.inverse();
  out.pose.pose = T;
  out.pose.cov = 0.5 * (cov + cov.transpose());
  out.final_cost = cost;
  out.ok = true;
  return out;
}

}  // namespace mmslam::visual
