#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "mmslam/error.hpp"
#include "mmslam/geom/horn.hpp"
#include "mmslam/geom/pose.hpp"
#include "support.hpp"

using namespace mmslam;
using namespace mmslam::geom;
using testing::random_pose;
using testing::random_spd;
using testing::random_vec;

namespace {

// Exp of a tangent sample drawn from N(0, cov).
Vec6 sample(sim::Rng& rng, const Eigen::LLT<Cov6>& llt) {
  Vec6 z;
  for (int i = 0; i < 6; ++i) z(i) = rng.normal();
  return llt.matrixL() * z;
}

Cov6 empirical(const std::vector<Vec6>& xs) {
  Cov6 c = Cov6::Zero();
  for (const auto& x : xs) c += x * x.transpose();
  return c / static_cast<double>(xs.size());
}

Mat3 rodrigues(const Vec3& w) {
  return Eigen::AngleAxisd(w.norm(), w.norm() > 0 ? Vec3(w.normalized()) : Vec3::UnitX()).toRotationMatrix();
}

}  // namespace

TEST_SUITE("geom") {

TEST_CASE("exp matches the angle-axis formula and log inverts it") {
  sim::Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Vec3 w = random_vec(rng, 3.0);
    if (w.norm() >= std::numbers::pi) continue;
    CHECK((exp_so3(w) - rodrigues(w)).norm() < 1e-12);
    CHECK((log_so3(exp_so3(w)) - w).norm() < 1e-9);
  }
  CHECK((exp_so3(Vec3::Zero()) - Mat3::Identity()).norm() == 0.0);
  CHECK((log_so3(exp_so3(Vec3(1e-9, 0, 0))) - Vec3(1e-9, 0, 0)).norm() < 1e-18);
  // Near pi.
  const Vec3 w(0, 0, std::numbers::pi - 1e-7);
  CHECK((log_so3(exp_so3(w)) - w).norm() < 1e-6);
}

TEST_CASE("right jacobian matches finite differences of exp") {
  sim::Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Vec3 w = random_vec(rng, 1.5);
    const Mat3 J = right_jacobian_so3(w);
    for (int k = 0; k < 3; ++k) {
      const double h = 1e-6;
      Vec3 d = Vec3::Zero();
      d(k) = h;
      // Exp(w + d) = Exp(w) Exp(J d)
      const Vec3 col = log_so3(exp_so3(w).transpose() * exp_so3(w + d)) / h;
      CHECK((col - J.col(k)).norm() < 1e-5);
    }
    CHECK((right_jacobian_inv_so3(w) * J - Mat3::Identity()).norm() < 1e-9);
  }
}

TEST_CASE("compose and invert agree with homogeneous matrices") {
  sim::Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Pose3 a = random_pose(rng), b = random_pose(rng);
    CHECK(((a * b).matrix() - a.matrix() * b.matrix()).norm() < 1e-12);
    CHECK((a.inverse().matrix() - a.matrix().inverse()).norm() < 1e-10);
    const Vec3 p = random_vec(rng);
    CHECK(((a * p) - (a.matrix() * p.homogeneous()).head<3>()).norm() < 1e-12);
    CHECK((Pose3::from_matrix(a.matrix()).matrix() - a.matrix()).norm() < 1e-12);
  }
}

TEST_CASE("retract and local are inverse") {
  sim::Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const Pose3 a = random_pose(rng);
    Vec6 xi;
    xi << random_vec(rng, 1.0), random_vec(rng, 2.0);
    const Pose3 b = a.retract(xi);
    CHECK((a.local(b) - xi).norm() < 1e-9);
    // Body-frame product retraction.
    CHECK((b.rotation_matrix() - a.rotation_matrix() * exp_so3(xi.head<3>())).norm() < 1e-12);
    CHECK((b.translation() - (a.translation() + a.rotation_matrix() * xi.tail<3>())).norm() < 1e-12);
  }
}

TEST_CASE("adjoint has the documented block form") {
  sim::Rng rng(5);
  const Pose3 p = random_pose(rng);
  const Mat6 ad = adjoint(p);
  const Mat3 R = p.rotation_matrix();
  CHECK((ad.topLeftCorner<3, 3>() - R).norm() < 1e-12);
  CHECK(ad.topRightCorner<3, 3>().norm() == 0.0);
  CHECK((ad.bottomLeftCorner<3, 3>() - skew(p.translation()) * R).norm() < 1e-12);
  CHECK((ad.bottomRightCorner<3, 3>() - R).norm() < 1e-12);
}

TEST_CASE("propagate_cov agrees with Monte-Carlo composition") {
  sim::Rng rng(6);
  const PoseWithCov p{random_pose(rng), random_spd(rng, 0.01)};
  const PoseWithCov d{random_pose(rng, 2.0), random_spd(rng, 0.01)};
  const Eigen::LLT<Cov6> lp(p.cov), ld(d.cov);
  const Pose3 mean = p.pose * d.pose;
  std::vector<Vec6> xs;
  for (int i = 0; i < 40000; ++i)
    xs.push_back(mean.local(p.pose.retract(sample(rng, lp)) * d.pose.retract(sample(rng, ld))));
  const PoseWithCov out = propagate_cov(p, d);
  CHECK((out.pose.matrix() - mean.matrix()).norm() < 1e-12);
  const Cov6 mc = empirical(xs);
  CHECK((mc - out.cov).norm() / out.cov.norm() < 0.05);
}

TEST_CASE("relative_cov agrees with Monte-Carlo relative pose") {
  sim::Rng rng(7);
  const PoseWithCov a{random_pose(rng), random_spd(rng, 0.01)};
  const PoseWithCov b{random_pose(rng), random_spd(rng, 0.01)};
  const Eigen::LLT<Cov6> la(a.cov), lb(b.cov);
  const Pose3 mean = a.pose.inverse() * b.pose;
  std::vector<Vec6> xs;
  for (int i = 0; i < 40000; ++i)
    xs.push_back(mean.local(a.pose.retract(sample(rng, la)).inverse() * b.pose.retract(sample(rng, lb))));
  const Cov6 c = relative_cov(a, b);
  CHECK((empirical(xs) - c).norm() / c.norm() < 0.05);
}

TEST_CASE("induced submap transform matches the matrix product") {
  sim::Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const Pose3 a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    const Mat4 ref = a.matrix() * b.matrix() * c.matrix().inverse();
    CHECK((induced_submap_transform(a, b, c).matrix() - ref).norm() < 1e-9);
  }
}

TEST_CASE("rotation angle equals the quaternion log norm") {
  sim::Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const Quat q = testing::random_rotation(rng);
    const double oracle = 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
    CHECK(std::abs(rotation_angle(q) - oracle) < 1e-7);
    CHECK(std::abs(rotation_angle(q.toRotationMatrix()) - oracle) < 1e-7);
  }
  CHECK(rotation_angle(Mat3::Identity()) == 0.0);
  // Clamping keeps the result finite for traces slightly above 3.
  CHECK(std::isfinite(rotation_angle(Mat3(Mat3::Identity() * (1.0 + 1e-15)))));
}

TEST_CASE("roll, pitch and yaw round trip through from_ypr") {
  sim::Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    const double y = rng.uniform(-3.0, 3.0), p = rng.uniform(-1.4, 1.4), r = rng.uniform(-3.0, 3.0);
    const Pose3 T = from_ypr(y, p, r, random_vec(rng));
    const RollPitch rp = roll_pitch(T);
    CHECK(std::abs(rp.roll - r) < 1e-9);
    CHECK(std::abs(rp.pitch - p) < 1e-9);
    CHECK(std::abs(yaw(T) - y) < 1e-9);
    const Pose3 g = gravity_aligned(T);
    CHECK(std::abs(roll_pitch(g).roll) < 1e-12);
    CHECK(std::abs(roll_pitch(g).pitch) < 1e-12);
    CHECK(std::abs(yaw(g) - y) < 1e-9);
    CHECK((g.translation() - T.translation()).norm() == 0.0);
  }
  CHECK(roll_pitch(from_ypr(0.3, std::numbers::pi / 2, 0.0, Vec3::Zero())).gimbal_lock);
}

TEST_CASE("nearest_psd clips negative eigenvalues only") {
  sim::Rng rng(11);
  const Cov6 spd = random_spd(rng);
  CHECK((nearest_psd(spd) - spd).norm() < 1e-14);
  Cov6 bad = spd;
  bad(0, 0) = -1.0;
  const Cov6 fixed = nearest_psd(bad);
  Eigen::SelfAdjointEigenSolver<Cov6> es(fixed);
  CHECK(es.eigenvalues().minCoeff() >= -1e-15);
  CHECK((fixed - fixed.transpose()).norm() == 0.0);
}

TEST_CASE("world position covariance rotates the translation block") {
  sim::Rng rng(12);
  const PoseWithCov p{random_pose(rng), random_spd(rng)};
  const Mat3 R = p.pose.rotation_matrix();
  CHECK((world_position_cov(p) - R * p.cov.bottomRightCorner<3, 3>() * R.transpose()).norm() < 1e-15);
}

TEST_CASE("horn_align recovers planted rigid motions") {
  sim::Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose3 T = random_pose(rng, 20.0);
    std::vector<Vec3> est, gt;
    for (int i = 0; i < 20; ++i) {
      est.push_back(random_vec(rng, 10.0));
      gt.push_back(T * est.back());
    }
    const Pose3 A = horn_align(est, gt);
    CHECK((A.matrix() - T.matrix()).norm() < 1e-9);
  }
  std::vector<Vec3> two{Vec3::Zero(), Vec3::UnitX()};
  CHECK_THROWS_AS(horn_align(two, two), Error);
  std::vector<Vec3> line{Vec3::Zero(), Vec3::UnitX(), Vec3(2, 0, 0)};
  CHECK_THROWS_AS(horn_align(line, line), Error);
  std::vector<Vec3> three{Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY()};
  std::vector<Vec3> four{Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  CHECK_THROWS_AS(horn_align(three, four), Error);
}

TEST_CASE("horn_align pins the first correspondence") {
  sim::Rng rng(14);
  std::vector<Vec3> est, gt;
  for (int i = 0; i < 30; ++i) {
    est.push_back(random_vec(rng, 5.0));
    gt.push_back(est.back() + random_vec(rng, 0.3));
  }
  const Pose3 A = horn_align(est, gt);
  CHECK(((A * est[0]) - gt[0]).norm() < 1e-12);
}

TEST_CASE("rigid_fit recovers a planted transform") {
  sim::Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose3 T = random_pose(rng);
    std::vector<Vec3> src, dst;
    for (int i = 0; i < 10; ++i) {
      src.push_back(random_vec(rng, 3.0));
      dst.push_back(T * src.back());
    }
    CHECK((rigid_fit(src, dst).matrix() - T.matrix()).norm() < 1e-9);
  }
}

TEST_CASE("unit quaternions survive construction bitwise") {
  sim::Rng rng(16);
  for (int i = 0; i < 100; ++i) {
    Quat q = testing::random_rotation(rng);
    if (q.w() < 0) q.coeffs() *= -1.0;
    const Pose3 p(q, Vec3::Zero());
    CHECK(p.rotation().coeffs() == q.coeffs());
  }
}

}  // TEST_SUITE
