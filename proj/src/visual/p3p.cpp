#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "mmslam/error.hpp"
#include "mmslam/geom/horn.hpp"
#include "mmslam/visual/pose_estimation.hpp"

namespace mmslam::visual {

namespace {

// Coefficients in ascending order of powers.
using Poly = std::array<double, 5>;

Poly mul(const Poly& a, const Poly& b) {
  Poly out{};
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; i + j < out.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

Poly add(const Poly& a, const Poly& b, double sb = 1.0) {
  Poly out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + sb * b[i];
  return out;
}

double eval(const Poly& p, double x) {
  double r = 0.0;
  for (std::size_t i = p.size(); i-- > 0;) r = r * x + p[i];
  return r;
}

double eval_deriv(const Poly& p, double x) {
  double r = 0.0;
  for (std::size_t i = p.size(); i-- > 1;) r = r * x + static_cast<double>(i) * p[i];
  return r;
}

std::vector<double> real_roots(const Poly& p) {
  double scale = 0.0;
  for (double c : p) scale = std::max(scale, std::abs(c));
  std::vector<double> roots;
  if (scale == 0.0) return roots;
  int degree = 4;
  while (degree > 0 && std::abs(p[static_cast<std::size_t>(degree)]) < 1e-14 * scale) --degree;
  if (degree == 0) return roots;

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  const double lead = p[static_cast<std::size_t>(degree)];
  for (int i = 0; i < degree; ++i) companion(0, i) = -p[static_cast<std::size_t>(degree - 1 - i)] / lead;
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  for (int i = 0; i < degree; ++i) {
    const std::complex<double> z = es.eigenvalues()(i);
    if (std::abs(z.imag()) > 1e-6 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int it = 0; it < 8; ++it) {
      const double d = eval_deriv(p, x);
      if (d == 0.0) break;
      const double step = eval(p, x) / d;
      x -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    roots.push_back(x);
  }
  return roots;
}

// Newton on the three law-of-cosines constraints for the ray depths.
void polish_depths(Eigen::Vector3d& s, const std::array<double, 3>& cosines,
                   const std::array<double, 3>& dist_sq) {
  static constexpr std::array<std::array<int, 2>, 3> kPairs{{{1, 2}, {0, 2}, {0, 1}}};
  for (int it = 0; it < 10; ++it) {
    Eigen::Vector3d f;
    Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
    for (int e = 0; e < 3; ++e) {
      const int i = kPairs[static_cast<std::size_t>(e)][0];
      const int j = kPairs[static_cast<std::size_t>(e)][1];
      const double c = cosines[static_cast<std::size_t>(e)];
      f(e) = s(i) * s(i) + s(j) * s(j) - 2.0 * s(i) * s(j) * c - dist_sq[static_cast<std::size_t>(e)];
      J(e, i) = 2.0 * s(i) - 2.0 * s(j) * c;
      J(e, j) = 2.0 * s(j) - 2.0 * s(i) * c;
    }
    const auto lu = J.fullPivLu();
    if (!lu.isInvertible()) return;
    const Eigen::Vector3d step = lu.solve(f);
    s -= step;
    if (step.norm() < 1e-15 * s.norm()) return;
  }
}

}  // namespace

std::vector<Pose3> p3p_solve(const std::array<Vec3, 3>& P, const std::array<Vec3, 3>& j) {
  const double scale = std::max({(P[1] - P[0]).norm(), (P[2] - P[0]).norm(), 1e-300});
  if ((P[1] - P[0]).cross(P[2] - P[0]).norm() < 1e-9 * scale * scale)
    throw Error(ErrorCode::kDegenerate, "p3p: collinear landmarks");

  const double a2 = (P[1] - P[2]).squaredNorm();
  const double b2 = (P[0] - P[2]).squaredNorm();
  const double c2 = (P[0] - P[1]).squaredNorm();
  const double ca = j[1].dot(j[2]);
  const double cb = j[0].dot(j[2]);
  const double cg = j[0].dot(j[1]);

  // With u = s2/s1 and v = s3/s1, u = N(v) / D(v); substituting into the
  // (s1, s2) constraint gives D^2 (1 - K3) + N^2 - 2 cos_gamma N D = 0.
  const double k = (a2 - c2) / b2;
  const Poly N{1.0 + k, -2.0 * k * cb, k - 1.0, 0.0, 0.0};
  const Poly D{2.0 * cg, -2.0 * ca, 0.0, 0.0, 0.0};
  const Poly K3{c2 / b2, -2.0 * cb * c2 / b2, c2 / b2, 0.0, 0.0};
  const Poly one_minus_k3 = add(Poly{1.0, 0, 0, 0, 0}, K3, -1.0);
  Poly quartic = add(mul(mul(D, D), one_minus_k3), mul(N, N));
  quartic = add(quartic, mul(N, D), -2.0 * cg);

  std::vector<Pose3> out;
  for (double v : real_roots(quartic)) {
    const double d = eval(D, v);
    if (std::abs(d) < 1e-12) continue;
    const double u = eval(N, v) / d;
    const double denom = 1.0 + v * v - 2.0 * v * cb;
    if (denom <= 0.0) continue;
    Eigen::Vector3d s;
    s(0) = std::sqrt(b2 / denom);
    s(1) = u * s(0);
    s(2) = v * s(0);
    if (!(s.array() > 0.0).all()) continue;
    polish_depths(s, {ca, cb, cg}, {a2, b2, c2});
    if (!(s.array() > 0.0).all() || !s.allFinite()) continue;

    std::array<Vec3, 3> cam{s(0) * j[0], s(1) * j[1], s(2) * j[2]};
    Pose3 T;
    try {
      T = geom::rigid_fit(P, cam);
    } catch (const Error&) {
      continue;
    }
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const Pose3& o) {
      return (o.translation() - T.translation()).norm() < 1e-9 * (1.0 + T.translation().norm()) &&
             geom::rotation_angle(o.rotation().conjugate() * T.rotation()) < 1e-9;
    });
    if (!duplicate) out.push_back(T);
  }
  return out;
}

}  // namespace mmslam::visual
