#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "graph_problems.hpp"
#include "mmslam/error.hpp"
#include "mmslam/graph/pose_graph.hpp"
#include "support.hpp"

using namespace mmslam;
using namespace mmslam::graph;
using geom::Vec3;
using geom::Vec6;
using testing::random_vec;

using namespace problems;

TEST_SUITE("graph") {

TEST_CASE("node ids") {
  CHECK(NodeId::submap(3).str() == "S3");
  CHECK(NodeId::keyframe(17).str() == "K17");
  CHECK(NodeId::submap(1) < NodeId::keyframe(0));
}

TEST_CASE("levenberg-marquardt matches a dense gauss-newton oracle") {
  sim::Rng rng(1);
  for (int n : {3, 6, 10}) {
    const auto p = loop_problem(rng, n, {{0, n - 1}});
    auto g = to_graph(p, std::nullopt);
    const auto st = g.optimize();
    CHECK(st.final_cost <= st.initial_cost);
    const auto ref = oracle::solve(p.factors, p.init);
    for (int i = 0; i < n; ++i)
      CHECK((g.estimate(NodeId::submap(i)).matrix() - ref[static_cast<std::size_t>(i)].matrix()).norm() < 1e-6);
    CHECK(g.cost(false) == doctest::Approx(oracle::cost(p.factors, ref)).epsilon(1e-6));
  }
}

TEST_CASE("cauchy bounds the influence of a planted outlier") {
  sim::Rng rng(2);
  const int n = 10;
  const auto clean = loop_problem(rng, n, {{0, 9}, {1, 6}, {2, 8}});
  auto with_outlier = clean;
  // A loop between two distant poses claiming they nearly coincide.
  with_outlier.factors.push_back({0, 5, Pose3(geom::Quat::Identity(), Vec3(0.3, 0, 0)), diag(0.005, 0.02)});
  auto g0 = to_graph(clean, 1.0);
  auto g1 = to_graph(with_outlier, 1.0);
  g0.optimize();
  g1.optimize();
  const double e0 = position_rmse(g0, clean.gt);
  const double e1 = position_rmse(g1, clean.gt);
  CHECK(e1 <= 2.0 * e0);
  // Without the robust loss the outlier drags the solution away.
  auto g2 = to_graph(with_outlier, std::nullopt);
  g2.optimize();
  CHECK(position_rmse(g2, clean.gt) > 2.0 * e0);
}

TEST_CASE("cauchy weight and loss") {
  CHECK(cauchy_loss(0.0, 1.0) == 0.0);
  CHECK(cauchy_loss(2.0, 1.0) == doctest::Approx(0.5 * std::log(5.0)));
  CHECK(cauchy_weight(0.0, 1.0) == 1.0);
  CHECK(cauchy_weight(2.0, 1.0) == doctest::Approx(0.2));
}

TEST_CASE("errors") {
  PoseGraph g;
  g.add_node(NodeId::submap(0), Pose3());
  CHECK_THROWS_AS(g.add_node(NodeId::submap(0)), Error);
  CHECK_THROWS_AS(g.add_prior(NodeId::submap(9), {Pose3(), Cov6::Identity()}), Error);
  CHECK_THROWS_AS(g.add_between(NodeId::submap(0), NodeId::submap(9), {Pose3(), Cov6::Identity()}), Error);
  Cov6 bad = Cov6::Identity();
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(g.add_prior(NodeId::submap(0), {Pose3(), bad}), Error);
  g.add_node(NodeId::submap(1));
  g.add_between(NodeId::submap(0), NodeId::submap(1), {Pose3(geom::Quat::Identity(), Vec3(1, 0, 0)), Cov6::Identity()});
  CHECK(g.has_estimate(NodeId::submap(1)));
  CHECK(g.estimate(NodeId::submap(1)).translation().x() == 1.0);
  try {
    g.optimize();
    FAIL("expected gauge error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kGaugeFreedom);
  }
}

TEST_CASE("marginal covariance") {
  sim::Rng rng(3);
  const Cov6 s0 = testing::random_spd(rng, 0.05);
  const Cov6 sz = testing::random_spd(rng, 0.05);
  const Pose3 x0 = testing::random_pose(rng), z = testing::random_pose(rng);
  PoseGraph g;
  g.add_node(NodeId::submap(0), x0);
  g.add_node(NodeId::submap(1));
  g.add_prior(NodeId::submap(0), {x0, s0});
  g.add_between(NodeId::submap(0), NodeId::submap(1), {z, sz});
  CHECK((g.marginal_cov(NodeId::submap(0)) - s0).norm() < 1e-9);
  // At a zero-residual estimate the chain marginal is the propagated covariance.
  const Cov6 expected = geom::propagate_cov({x0, s0}, {z, sz}).cov;
  CHECK((g.marginal_cov(NodeId::submap(1)) - expected).norm() < 1e-9 * expected.norm());
}

TEST_CASE("save and load round trip") {
  sim::Rng rng(4);
  const auto p = loop_problem(rng, 5, {{0, 4}});
  auto g = to_graph(p, 0.7);
  g.add_node(NodeId::keyframe(3));
  g.add_between(NodeId::submap(2), NodeId::keyframe(3), {testing::random_pose(rng), diag(0.01, 0.01)});
  std::stringstream a;
  g.save(a);
  const auto h = PoseGraph::load(a);
  std::stringstream b;
  h.save(b);
  CHECK(a.str() == b.str());
  CHECK(h.factors().size() == g.factors().size());
  CHECK(h.factors().back().robust == std::nullopt);
  CHECK(h.factors()[5].robust == 0.7);
  std::stringstream junk("NODE X1 0 0");
  CHECK_THROWS_AS(PoseGraph::load(junk), Error);
}

}  // TEST_SUITE
