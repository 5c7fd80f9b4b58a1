#include "mmslam/graph/pose_graph.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "mmslam/error.hpp"

namespace mmslam::graph {

using geom::Mat3;
using geom::Mat6;
using geom::Vec3;
using geom::Vec6;

std::string NodeId::str() const {
  return (kind == NodeKind::kSubmap ? "S" : "K") + std::to_string(id);
}

double cauchy_weight(double r, double c) { return 1.0 / (1.0 + (r * r) / (c * c)); }
double cauchy_loss(double r, double c) { return 0.5 * c * c * std::log1p((r * r) / (c * c)); }

namespace {

void check_cov(const Cov6& c) {
  if (!c.allFinite() || (c - c.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + c.cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::kInvalidArgument, "factor covariance must be finite and symmetric");
  Eigen::LLT<Mat6> llt(c);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::kInvalidArgument, "factor covariance must be positive definite");
}

Mat6 information(const Cov6& c) { return c.ldlt().solve(Mat6::Identity()); }

double factor_cost(const Vec6& e, const Mat6& info, const std::optional<double>& robust,
                   bool use_robust) {
  const double r2 = std::max(0.0, e.dot(info * e));
  if (use_robust && robust) return cauchy_loss(std::sqrt(r2), *robust);
  return 0.5 * r2;
}

double factor_weight(const Vec6& e, const Mat6& info, const std::optional<double>& robust,
                     bool use_robust) {
  if (!use_robust || !robust) return 1.0;
  return cauchy_weight(std::sqrt(std::max(0.0, e.dot(info * e))), *robust);
}

using Sparse = Eigen::SparseMatrix<double>;

}  // namespace

void PoseGraph::add_node(NodeId id, std::optional<Pose3> initial) {
  if (has_node(id)) throw Error(ErrorCode::kDuplicateId, "duplicate node " + id.str());
  index_.emplace(id, nodes_.size());
  nodes_.push_back({id, initial});
  order_.push_back(id);
}

std::size_t PoseGraph::index_of(NodeId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::kUnknownNode, "unknown node " + id.str());
  return it->second;
}

void PoseGraph::add_prior(NodeId id, const PoseWithCov& prior) {
  const std::size_t i = index_of(id);
  check_cov(prior.cov);
  if (!nodes_[i].pose) nodes_[i].pose = prior.pose;
  factors_.push_back({FactorKind::kPrior, id, id, prior, std::nullopt});
}

void PoseGraph::add_between(NodeId a, NodeId b, const PoseWithCov& meas, std::optional<double> robust) {
  const std::size_t ia = index_of(a);
  const std::size_t ib = index_of(b);
  if (ia == ib) throw Error(ErrorCode::kInvalidArgument, "between factor endpoints must differ");
  check_cov(meas.cov);
  if (robust && !(*robust > 0.0)) throw Error(ErrorCode::kInvalidArgument, "Cauchy scale must be positive");
  if (!nodes_[ib].pose && nodes_[ia].pose) nodes_[ib].pose = *nodes_[ia].pose * meas.pose;
  factors_.push_back({FactorKind::kBetween, a, b, meas, robust});
}

const Pose3& PoseGraph::estimate(NodeId id) const {
  const auto& n = nodes_[index_of(id)];
  if (!n.pose) throw Error(ErrorCode::kPrecondition, "node " + id.str() + " has no estimate");
  return *n.pose;
}

void PoseGraph::set_estimate(NodeId id, const Pose3& p) { nodes_[index_of(id)].pose = p; }

bool PoseGraph::has_estimate(NodeId id) const { return nodes_[index_of(id)].pose.has_value(); }

std::vector<Pose3> PoseGraph::current() const {
  std::vector<Pose3> x;
  x.reserve(nodes_.size());
  for (const auto& n : nodes_) {
    if (!n.pose) throw Error(ErrorCode::kPrecondition, "node " + n.id.str() + " has no estimate");
    x.push_back(*n.pose);
  }
  return x;
}

PoseGraph::Linearized PoseGraph::linearize(const Factor& f, const std::vector<Pose3>& x) const {
  Linearized L;
  const Pose3& Z = f.measurement.pose;
  const Mat3 Rz = Z.rotation_matrix();
  if (f.kind == FactorKind::kPrior) {
    const Pose3& X = x[index_.at(f.a)];
    L.e = Z.local(X);
    L.Ja.setZero();
    L.Ja.topLeftCorner<3, 3>() = geom::right_jacobian_inv_so3(L.e.head<3>());
    L.Ja.bottomRightCorner<3, 3>() = Rz.transpose() * X.rotation_matrix();
    L.Jb.setZero();
    return L;
  }
  const Pose3& A = x[index_.at(f.a)];
  const Pose3& B = x[index_.at(f.b)];
  const Mat3 Ra = A.rotation_matrix();
  const Mat3 Rb = B.rotation_matrix();
  L.e = Z.local(A.inverse() * B);
  const Mat3 Jri = geom::right_jacobian_inv_so3(L.e.head<3>());
  const Vec3 d = Ra.transpose() * (B.translation() - A.translation());
  L.Ja.setZero();
  L.Jb.setZero();
  L.Ja.topLeftCorner<3, 3>() = -Jri * Rb.transpose() * Ra;
  L.Ja.bottomLeftCorner<3, 3>() = Rz.transpose() * geom::skew(d);
  L.Ja.bottomRightCorner<3, 3>() = -Rz.transpose();
  L.Jb.topLeftCorner<3, 3>() = Jri;
  L.Jb.bottomRightCorner<3, 3>() = Rz.transpose() * Ra.transpose() * Rb;
  return L;
}

Vec6 PoseGraph::residual(const Factor& f) const { return linearize(f, current()).e; }

double PoseGraph::cost_at(const std::vector<Pose3>& x, bool use_robust) const {
  double c = 0.0;
  for (const auto& f : factors_) {
    const Pose3& Z = f.measurement.pose;
    const Vec6 e = f.kind == FactorKind::kPrior ? Z.local(x[index_.at(f.a)])
                                                : Z.local(x[index_.at(f.a)].inverse() * x[index_.at(f.b)]);
    c += factor_cost(e, information(f.measurement.cov), f.robust, use_robust);
  }
  return c;
}

double PoseGraph::cost(bool use_robust) const { return cost_at(current(), use_robust); }

namespace {

struct System {
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd g;
};

void add_block(std::vector<Eigen::Triplet<double>>& t, std::size_t r, std::size_t c, const Mat6& m) {
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (m(i, j) != 0.0)
        t.emplace_back(static_cast<int>(6 * r) + i, static_cast<int>(6 * c) + j, m(i, j));
}

}  // namespace

OptimizeStats PoseGraph::optimize(const OptimizeConfig& cfg) {
  bool has_prior = false;
  bool has_robust = false;
  for (const auto& f : factors_) {
    has_prior |= f.kind == FactorKind::kPrior;
    has_robust |= f.robust.has_value();
  }
  if (!has_prior) throw Error(ErrorCode::kGaugeFreedom, "pose graph has no prior factor");

  const std::size_t n = nodes_.size();
  const int dim = static_cast<int>(6 * n);
  std::vector<Mat6> infos;
  infos.reserve(factors_.size());
  for (const auto& f : factors_) infos.push_back(information(f.measurement.cov));

  // One LM run from x0; robust factors enter with IRLS weights when use_robust.
  auto run = [&](std::vector<Pose3> x, bool use_robust, int& iters, bool& converged) {
    double cost = cost_at(x, use_robust);
    double lambda = cfg.lambda_init;
    converged = false;
    for (int it = 0; it < cfg.max_iters && !converged; ++it) {
      std::vector<Eigen::Triplet<double>> trip;
      Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
      for (std::size_t k = 0; k < factors_.size(); ++k) {
        const Factor& f = factors_[k];
        const Linearized L = linearize(f, x);
        const double w = factor_weight(L.e, infos[k], f.robust, use_robust);
        const Mat6 W = w * infos[k];
        const std::size_t ia = index_.at(f.a);
        add_block(trip, ia, ia, L.Ja.transpose() * W * L.Ja);
        g.segment<6>(static_cast<int>(6 * ia)) += L.Ja.transpose() * W * L.e;
        if (f.kind == FactorKind::kBetween) {
          const std::size_t ib = index_.at(f.b);
          add_block(trip, ib, ib, L.Jb.transpose() * W * L.Jb);
          add_block(trip, ia, ib, L.Ja.transpose() * W * L.Jb);
          add_block(trip, ib, ia, L.Jb.transpose() * W * L.Ja);
          g.segment<6>(static_cast<int>(6 * ib)) += L.Jb.transpose() * W * L.e;
        }
      }
      Sparse H(dim, dim);
      H.setFromTriplets(trip.begin(), trip.end());
      const Eigen::VectorXd diag = H.diagonal();

      bool accepted = false;
      while (!accepted && lambda < 1e12) {
        Sparse Hd = H;
        for (int i = 0; i < dim; ++i) Hd.coeffRef(i, i) += lambda * (diag(i) + 1e-12);
        Eigen::SimplicialLDLT<Sparse> solver(Hd);
        if (solver.info() != Eigen::Success)
          throw Error(ErrorCode::kSingular, "pose graph normal equations are singular");
        const Eigen::VectorXd delta = -solver.solve(g);
        std::vector<Pose3> xn(x);
        for (std::size_t i = 0; i < n; ++i) xn[i] = x[i].retract(delta.segment<6>(static_cast<int>(6 * i)));
        const double cn = cost_at(xn, use_robust);
        if (std::isfinite(cn) && cn <= cost) {
          const double rel = (cost - cn) / std::max(cost, std::numeric_limits<double>::min());
          x = std::move(xn);
          cost = cn;
          lambda = std::max(lambda * 0.1, 1e-12);
          accepted = true;
          iters = it + 1;
          if (rel < cfg.tol || delta.norm() < 1e-12) converged = true;
        } else {
          lambda *= 10.0;
        }
      }
      if (!accepted) converged = true;  // no descent direction left
    }
    return x;
  };

  OptimizeStats stats;
  const std::vector<Pose3> x0 = current();
  stats.initial_cost = cost_at(x0, true);

  int iters = 0;
  bool conv = false;
  std::vector<Pose3> best = run(x0, true, iters, conv);
  double best_cost = cost_at(best, true);
  stats.iterations = iters;
  stats.converged = conv;

  if (has_robust && cfg.robust_warm_start) {
    // Robust losses are nonconvex; a plain solve first lets large but
    // consistent loop residuals pull the estimate before they are downweighted.
    int it1 = 0, it2 = 0;
    bool c1 = false, c2 = false;
    const auto warm = run(x0, false, it1, c1);
    const auto refined = run(warm, true, it2, c2);
    const double c = cost_at(refined, true);
    if (c < best_cost) {
      best = refined;
      best_cost = c;
      stats.iterations = it1 + it2;
      stats.converged = c2;
    }
  }

  for (std::size_t i = 0; i < n; ++i) nodes_[i].pose = best[i];
  stats.final_cost = best_cost;
  return stats;
}

Cov6 PoseGraph::marginal_cov(NodeId id) const {
  const std::size_t target = index_of(id);
  const auto x = current();
  const int dim = static_cast<int>(6 * nodes_.size());
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& f : factors_) {
    const Linearized L = linearize(f, x);
    const Mat6 info = information(f.measurement.cov);
    const Mat6 W = factor_weight(L.e, info, f.robust, true) * info;
    const std::size_t ia = index_.at(f.a);
    add_block(trip, ia, ia, L.Ja.transpose() * W * L.Ja);
    if (f.kind == FactorKind::kBetween) {
      const std::size_t ib = index_.at(f.b);
      add_block(trip, ib, ib, L.Jb.transpose() * W * L.Jb);
      add_block(trip, ia, ib, L.Ja.transpose() * W * L.Jb);
      add_block(trip, ib, ia, L.Jb.transpose() * W * L.Ja);
    }
  }
  Sparse H(dim, dim);
  H.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Sparse> solver(H);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::kSingular, "information matrix is singular at " + id.str());
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(dim, 6);
  rhs.block<6, 6>(static_cast<int>(6 * target), 0).setIdentity();
  const Eigen::MatrixXd sol = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !sol.allFinite() ||
      (solver.vectorD().array() <= 0.0).any())
    throw Error(ErrorCode::kSingular, "information matrix is singular at " + id.str());
  Cov6 c = sol.block<6, 6>(static_cast<int>(6 * target), 0);
  return 0.5 * (c + c.transpose());
}

}  // namespace mmslam::graph
