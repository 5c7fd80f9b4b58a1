#include "mmslam/geom/horn.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "mmslam/error.hpp"

namespace mmslam::geom {

namespace {

// Second-largest over largest eigenvalue of the scatter about `origin`.
double planarity(std::span<const Vec3> pts, const Vec3& origin) {
  Mat3 scatter = Mat3::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p - origin;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(scatter);
  const double largest = es.eigenvalues()(2);
  if (largest <= 0.0) return 0.0;
  return es.eigenvalues()(1) / largest;
}

}  // namespace

Pose3 horn_align(std::span<const Vec3> est, std::span<const Vec3> gt) {
  if (est.size() != gt.size())
    throw Error(ErrorCode::kDimensionMismatch, "horn_align: point sets differ in length");
  if (est.size() < 3)
    throw Error(ErrorCode::kDegenerate, "horn_align: need at least 3 correspondences");

  const Vec3 e0 = est[0];
  const Vec3 g0 = gt[0];
  if (planarity(est, e0) < 1e-12 || planarity(gt, g0) < 1e-12)
    throw Error(ErrorCode::kDegenerate, "horn_align: collinear configuration");

  Mat3 S = Mat3::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) S += (est[i] - e0) * (gt[i] - g0).transpose();

  const double sxx = S(0, 0), sxy = S(0, 1), sxz = S(0, 2);
  const double syx = S(1, 0), syy = S(1, 1), syz = S(1, 2);
  const double szx = S(2, 0), szy = S(2, 1), szz = S(2, 2);
  Eigen::Matrix4d N;
  N << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
       syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
       szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
       sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(N);
  const Eigen::Vector4d v = es.eigenvectors().col(3);
  const Quat q(v(0), v(1), v(2), v(3));
  const Mat3 R = q.normalized().toRotationMatrix();
  return Pose3(R, g0 - R * e0);
}

Pose3 rigid_fit(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size())
    throw Error(ErrorCode::kDimensionMismatch, "rigid_fit: point sets differ in length");
  if (src.size() < 3) throw Error(ErrorCode::kDegenerate, "rigid_fit: need at least 3 points");
  Eigen::Matrix3Xd a(3, src.size()), b(3, dst.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    a.col(static_cast<Eigen::Index>(i)) = src[i];
    b.col(static_cast<Eigen::Index>(i)) = dst[i];
  }
  const Mat4 m = Eigen::umeyama(a, b, false);
  return Pose3::from_matrix(m);
}

}  // namespace mmslam::geom
