#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmslam/geom/pose.hpp"

namespace mmslam::graph {

using geom::Cov6;
using geom::Pose3;
using geom::PoseWithCov;

enum class NodeKind { kSubmap, kKeyframe };

struct NodeId {
  NodeKind kind = NodeKind::kSubmap;
  std::uint64_t id = 0;

  static NodeId submap(std::uint64_t i) { return {NodeKind::kSubmap, i}; }
  static NodeId keyframe(std::uint64_t i) { return {NodeKind::kKeyframe, i}; }
  auto operator<=>(const NodeId&) const = default;
  std::string str() const;  // "S3", "K17"
};

enum class FactorKind { kPrior, kBetween };

// Between factors measure a^-1 * b. The residual is the body-frame tangent
// vector taking the measurement to the estimate (Pose3::local), whitened by
// the measurement covariance.
struct Factor {
  FactorKind kind = FactorKind::kBetween;
  NodeId a;
  NodeId b;  // unused for priors
  PoseWithCov measurement;
  std::optional<double> robust;  // Cauchy scale on the whitened residual norm
};

struct OptimizeConfig {
  int max_iters = 100;
  double tol = 1e-10;           // relative cost change
  double lambda_init = 1e-4;
  bool robust_warm_start = true;  // first converge with robust factors treated as plain
};

struct OptimizeStats {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
};

// Batch Levenberg-Marquardt pose graph over SE(3) with the body-frame
// retraction T (+) xi = (R Exp(w), t + R v).
class PoseGraph {
 public:
  // Throws Error(kDuplicateId). A node without an initial estimate gets one
  // from the first between factor that reaches it.
  void add_node(NodeId id, std::optional<Pose3> initial = std::nullopt);
  bool has_node(NodeId id) const { return index_.count(id) > 0; }
  std::size_t size() const { return nodes_.size(); }

  // Throws Error(kUnknownNode); covariances must be symmetric positive definite.
  void add_prior(NodeId id, const PoseWithCov& prior);
  void add_between(NodeId a, NodeId b, const PoseWithCov& meas,
                   std::optional<double> robust = std::nullopt);

  const Pose3& estimate(NodeId id) const;
  void set_estimate(NodeId id, const Pose3& p);
  bool has_estimate(NodeId id) const;
  const std::vector<NodeId>& node_ids() const { return order_; }
  const std::vector<Factor>& factors() const { return factors_; }

  // Total cost: sum over factors of r^2/2, or c^2/2 ln(1 + r^2/c^2) for
  // robust factors, with r the whitened residual norm.
  double cost(bool use_robust = true) const;
  Eigen::Matrix<double, 6, 1> residual(const Factor& f) const;

  // Throws Error(kGaugeFreedom) without a prior, Error(kPrecondition) if a
  // node has no estimate, Error(kSingular) if the system cannot be solved.
  OptimizeStats optimize(const OptimizeConfig& cfg = {});

  // Marginal covariance from the inverse Gauss-Newton information at the
  // current estimate (robust factors weighted at their current residual).
  Cov6 marginal_cov(NodeId id) const;

  // Line format, one record per line, numbers printed with %.17g:
  //   NODE <S|K><id> tx ty tz qx qy qz qw
  //   PRIOR <S|K><id> tx ty tz qx qy qz qw c00 ... c55
  //   BETWEEN <S|K><id> <S|K><id> tx ty tz qx qy qz qw c00 ... c55 <cauchy|->
  // Nodes come first, in insertion order, then factors in insertion order.
  void save(std::ostream& os) const;
  static PoseGraph load(std::istream& is);

 private:
  struct Node {
    NodeId id;
    std::optional<Pose3> pose;
  };
  struct Linearized {
    Eigen::Matrix<double, 6, 1> e;
    Eigen::Matrix<double, 6, 6> Ja;
    Eigen::Matrix<double, 6, 6> Jb;
  };

  std::size_t index_of(NodeId id) const;
  Linearized linearize(const Factor& f, const std::vector<Pose3>& x) const;
  double cost_at(const std::vector<Pose3>& x, bool use_robust) const;
  std::vector<Pose3> current() const;

  std::vector<Node> nodes_;
  std::vector<NodeId> order_;
  std::map<NodeId, std::size_t> index_;
  std::vector<Factor> factors_;
};

// Cauchy weight and loss on the whitened residual norm.
double cauchy_weight(double r, double c);
double cauchy_loss(double r, double c);

}  // namespace mmslam::graph
