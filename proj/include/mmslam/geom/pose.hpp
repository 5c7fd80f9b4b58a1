#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mmslam::geom {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Quat = Eigen::Quaterniond;

// 6x6 covariance on the tangent space, ordered (rotation, translation).
using Cov6 = Mat6;

Mat3 skew(const Vec3& v);
Mat3 exp_so3(const Vec3& omega);
Vec3 log_so3(const Mat3& R);
Mat3 right_jacobian_so3(const Vec3& omega);
Mat3 right_jacobian_inv_so3(const Vec3& omega);

// Rigid transform x' = R x + t. The rotation is kept as a unit quaternion
// and renormalized whenever it is produced by arithmetic.
//
// Tangent perturbations are body-frame and ordered (rotation, translation):
//   T (+) xi = (R Exp(w), t + R v),  xi = (w, v).
// All covariances in the library use this convention.
class Pose3 {
 public:
  Pose3() : q_(Quat::Identity()), t_(Vec3::Zero()) {}
  Pose3(const Quat& q, const Vec3& t);
  Pose3(const Mat3& R, const Vec3& t);

  static Pose3 identity() { return {}; }
  static Pose3 from_matrix(const Mat4& m);

  const Quat& rotation() const { return q_; }
  Mat3 rotation_matrix() const { return q_.toRotationMatrix(); }
  const Vec3& translation() const { return t_; }
  Mat4 matrix() const;

  Pose3 operator*(const Pose3& other) const;
  Vec3 operator*(const Vec3& p) const { return q_ * p + t_; }
  Pose3 inverse() const;

  Pose3 retract(const Vec6& xi) const;
  // Inverse of retract: returns xi with this->retract(xi) == other.
  Vec6 local(const Pose3& other) const;

  bool is_finite() const;

 private:
  Quat q_;
  Vec3 t_;
};

struct PoseWithCov {
  Pose3 pose;
  Cov6 cov = Cov6::Zero();
};

Pose3 compose(const Pose3& a, const Pose3& b);
Pose3 invert(const Pose3& p);

// Adjoint [[R, 0], [t^ R, R]] in (rotation, translation) ordering.
Mat6 adjoint(const Pose3& p);

// First-order covariance of p * delta with independent noise on both:
// Ad(delta^-1) cov_p Ad(delta^-1)^T + cov_delta.
PoseWithCov propagate_cov(const PoseWithCov& p, const PoseWithCov& delta);

// Covariance of a.inverse() * b for independent a and b.
Cov6 relative_cov(const PoseWithCov& a, const PoseWithCov& b);

// T_{s0}^{s1} = T_{k1}^{s1} * T_{k0}^{k1} * (T_{k0}^{s0})^-1.
Pose3 induced_submap_transform(const Pose3& t_k1_in_s1, const Pose3& t_k0_to_k1,
                               const Pose3& t_k0_in_s0);

// arccos((tr(R) - 1) / 2) with the argument clamped to [-1, 1].
double rotation_angle(const Mat3& R);
double rotation_angle(const Quat& q);

struct RollPitch {
  double roll = 0.0;
  double pitch = 0.0;
  bool gimbal_lock = false;
};

// Roll and pitch of the ZYX (yaw-pitch-roll) decomposition R = Rz Ry Rx.
RollPitch roll_pitch(const Pose3& p);
double yaw(const Pose3& p);

// Same pose with roll and pitch removed (yaw and translation kept).
Pose3 gravity_aligned(const Pose3& p);

Pose3 from_ypr(double yaw, double pitch, double roll, const Vec3& t);

// Symmetrize and clip negative eigenvalues.
Cov6 nearest_psd(const Cov6& c);

// Covariance of the translation in the world frame, R Sigma_tt R^T.
Mat3 world_position_cov(const PoseWithCov& p);

}  // namespace mmslam::geom
