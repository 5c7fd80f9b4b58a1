#include "mmslam/geom/pose.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "mmslam/error.hpp"

namespace mmslam {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kNoOverlap: return "no-overlap";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kUnknownNode: return "unknown-node";
    case ErrorCode::kGaugeFreedom: return "gauge-freedom";
    case ErrorCode::kSingular: return "singular";
    case ErrorCode::kIdMismatch: return "id-mismatch";
    case ErrorCode::kOutOfBounds: return "out-of-bounds";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kPrecondition: return "precondition";
  }
  return "unknown";
}

}  // namespace mmslam

namespace mmslam::geom {

namespace {

Quat normalized(const Quat& q) {
  // Already-unit inputs are kept bit-for-bit so serialized poses round-trip.
  Quat out = std::abs(q.squaredNorm() - 1.0) <= 1e-15 ? q : q.normalized();
  // Canonical hemisphere keeps serialized output stable.
  if (out.w() < 0.0) out.coeffs() = -out.coeffs();
  return out;
}

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 exp_so3(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) return Mat3::Identity() + skew(omega);
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

Vec3 log_so3(const Mat3& R) {
  Quat q(R);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double vn = q.vec().norm();
  if (vn < 1e-12) return 2.0 * q.vec() / q.w();
  const double angle = 2.0 * std::atan2(vn, q.w());
  return angle * q.vec() / vn;
}

Mat3 right_jacobian_so3(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 W = skew(omega);
  if (theta < 1e-6) return Mat3::Identity() - 0.5 * W + W * W / 6.0;
  const double t2 = theta * theta;
  return Mat3::Identity() - (1.0 - std::cos(theta)) / t2 * W +
         (theta - std::sin(theta)) / (t2 * theta) * W * W;
}

Mat3 right_jacobian_inv_so3(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 W = skew(omega);
  if (theta < 1e-6) return Mat3::Identity() + 0.5 * W + W * W / 12.0;
  const double t2 = theta * theta;
  const double c = 1.0 / t2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Mat3::Identity() + 0.5 * W + c * W * W;
}

Pose3::Pose3(const Quat& q, const Vec3& t) : q_(normalized(q)), t_(t) {}

Pose3::Pose3(const Mat3& R, const Vec3& t) : q_(normalized(Quat(R))), t_(t) {}

Pose3 Pose3::from_matrix(const Mat4& m) {
  return Pose3(Mat3(m.topLeftCorner<3, 3>()), Vec3(m.topRightCorner<3, 1>()));
}

Mat4 Pose3::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = t_;
  return m;
}

Pose3 Pose3::operator*(const Pose3& other) const {
  return Pose3(q_ * other.q_, q_ * other.t_ + t_);
}

Pose3 Pose3::inverse() const {
  const Quat qi = q_.conjugate();
  return Pose3(qi, -(qi * t_));
}

Pose3 Pose3::retract(const Vec6& xi) const {
  const Vec3 w = xi.head<3>();
  const Vec3 v = xi.tail<3>();
  const double theta = w.norm();
  Quat dq = Quat::Identity();
  if (theta > 0.0) dq = Quat(Eigen::AngleAxisd(theta, w / theta));
  return Pose3(q_ * dq, t_ + q_ * v);
}

Vec6 Pose3::local(const Pose3& other) const {
  Vec6 xi;
  xi.head<3>() = log_so3((q_.conjugate() * other.q_).toRotationMatrix());
  xi.tail<3>() = q_.conjugate() * (other.t_ - t_);
  return xi;
}

bool Pose3::is_finite() const {
  return q_.coeffs().allFinite() && t_.allFinite();
}

Pose3 compose(const Pose3& a, const Pose3& b) { return a * b; }

Pose3 invert(const Pose3& p) { return p.inverse(); }

Mat6 adjoint(const Pose3& p) {
  const Mat3 R = p.rotation_matrix();
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = R;
  ad.bottomLeftCorner<3, 3>() = skew(p.translation()) * R;
  ad.bottomRightCorner<3, 3>() = R;
  return ad;
}

PoseWithCov propagate_cov(const PoseWithCov& p, const PoseWithCov& delta) {
  const Mat6 ad = adjoint(delta.pose.inverse());
  PoseWithCov out;
  out.pose = p.pose * delta.pose;
  out.cov = ad * p.cov * ad.transpose() + delta.cov;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

Cov6 relative_cov(const PoseWithCov& a, const PoseWithCov& b) {
  // a^-1 b perturbed: Exp(-Ad(b^-1 a) xi_a) and Exp(xi_b) on the right.
  const Mat6 ad = adjoint(b.pose.inverse() * a.pose);
  Cov6 c = ad * a.cov * ad.transpose() + b.cov;
  return 0.5 * (c + c.transpose());
}

Pose3 induced_submap_transform(const Pose3& t_k1_in_s1, const Pose3& t_k0_to_k1,
                               const Pose3& t_k0_in_s0) {
  return t_k1_in_s1 * t_k0_to_k1 * t_k0_in_s0.inverse();
}

double rotation_angle(const Mat3& R) {
  const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::clamp(std::acos(c), 0.0, M_PI);
}

double rotation_angle(const Quat& q) { return rotation_angle(q.toRotationMatrix()); }

RollPitch roll_pitch(const Pose3& p) {
  const Mat3 R = p.rotation_matrix();
  RollPitch rp;
  rp.pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  if (std::abs(std::abs(rp.pitch) - M_PI / 2.0) < 1e-6) {
    rp.gimbal_lock = true;
    rp.roll = 0.0;
    return rp;
  }
  rp.roll = std::atan2(R(2, 1), R(2, 2));
  return rp;
}

double yaw(const Pose3& p) {
  const Mat3 R = p.rotation_matrix();
  return std::atan2(R(1, 0), R(0, 0));
}

Pose3 gravity_aligned(const Pose3& p) {
  return Pose3(Quat(Eigen::AngleAxisd(yaw(p), Vec3::UnitZ())), p.translation());
}

Pose3 from_ypr(double yaw_rad, double pitch, double roll, const Vec3& t) {
  const Quat q = Eigen::AngleAxisd(yaw_rad, Vec3::UnitZ()) *
                 Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                 Eigen::AngleAxisd(roll, Vec3::UnitX());
  return Pose3(q, t);
}

Cov6 nearest_psd(const Cov6& c) {
  const Cov6 sym = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Cov6> es(sym);
  Vec6 ev = es.eigenvalues().cwiseMax(0.0);
  const Cov6 out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

Mat3 world_position_cov(const PoseWithCov& p) {
  const Mat3 R = p.pose.rotation_matrix();
  return R * p.cov.bottomRightCorner<3, 3>() * R.transpose();
}

}  // namespace mmslam::geom
