#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "mmslam/error.hpp"
#include "mmslam/graph/pose_graph.hpp"

namespace mmslam::graph {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string pose_fields(const Pose3& p) {
  const auto& t = p.translation();
  const auto& q = p.rotation();
  std::string s;
  for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) s += " " + num(v);
  return s;
}

std::string cov_fields(const Cov6& c) {
  std::string s;
  for (int r = 0; r < 6; ++r)
    for (int k = 0; k < 6; ++k) s += " " + num(c(r, k));
  return s;
}

NodeId parse_id(const std::string& tok) {
  if (tok.size() < 2 || (tok[0] != 'S' && tok[0] != 'K'))
    throw Error(ErrorCode::kIo, "bad node id '" + tok + "'");
  try {
    std::size_t used = 0;
    const auto v = std::stoull(tok.substr(1), &used);
    if (used + 1 != tok.size()) throw Error(ErrorCode::kIo, "bad node id '" + tok + "'");
    return {tok[0] == 'S' ? NodeKind::kSubmap : NodeKind::kKeyframe, v};
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kIo, "bad node id '" + tok + "'");
  }
}

Pose3 parse_pose(std::istream& is) {
  double v[7];
  for (double& x : v)
    if (!(is >> x)) throw Error(ErrorCode::kIo, "truncated pose");
  return Pose3(geom::Quat(v[6], v[3], v[4], v[5]), geom::Vec3(v[0], v[1], v[2]));
}

Cov6 parse_cov(std::istream& is) {
  Cov6 c;
  for (int r = 0; r < 6; ++r)
    for (int k = 0; k < 6; ++k)
      if (!(is >> c(r, k))) throw Error(ErrorCode::kIo, "truncated covariance");
  return c;
}

}  // namespace

void PoseGraph::save(std::ostream& os) const {
  for (const auto& n : nodes_) {
    os << "NODE " << n.id.str();
    if (n.pose) os << pose_fields(*n.pose);
    os << "\n";
  }
  for (const auto& f : factors_) {
    if (f.kind == FactorKind::kPrior) {
      os << "PRIOR " << f.a.str() << pose_fields(f.measurement.pose) << cov_fields(f.measurement.cov) << "\n";
    } else {
      os << "BETWEEN " << f.a.str() << " " << f.b.str() << pose_fields(f.measurement.pose)
         << cov_fields(f.measurement.cov) << " " << (f.robust ? num(*f.robust) : "-") << "\n";
    }
  }
}

PoseGraph PoseGraph::load(std::istream& is) {
  PoseGraph g;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag, id;
    ls >> tag >> id;
    if (tag == "NODE") {
      std::optional<Pose3> p;
      if (ls >> std::ws && ls.peek() != EOF) p = parse_pose(ls);
      g.add_node(parse_id(id), p);
    } else if (tag == "PRIOR") {
      const Pose3 p = parse_pose(ls);
      g.add_prior(parse_id(id), {p, parse_cov(ls)});
    } else if (tag == "BETWEEN") {
      std::string id_b, robust;
      ls >> id_b;
      const Pose3 p = parse_pose(ls);
      const Cov6 c = parse_cov(ls);
      if (!(ls >> robust)) throw Error(ErrorCode::kIo, "missing robust field");
      std::optional<double> r;
      if (robust != "-") r = std::stod(robust);
      g.add_between(parse_id(id), parse_id(id_b), {p, c}, r);
    } else {
      throw Error(ErrorCode::kIo, "unknown graph record '" + tag + "'");
    }
  }
  return g;
}

}  // namespace mmslam::graph
