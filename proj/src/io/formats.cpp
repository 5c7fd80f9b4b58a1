#include "mmslam/io/formats.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mmslam/error.hpp"

namespace mmslam::io {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

namespace {

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, const fs::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw Error(ErrorCode::kIo, "truncated file: " + path.string());
  return v;
}

}  // namespace

void write_cloud(const fs::path& path, const cloud::PointCloud& cloud) {
  cloud.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(cloud.size()));
  put<std::uint8_t>(os, cloud.has_colors() ? 1 : 0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) put<float>(os, static_cast<float>(cloud.points[i](k)));
    if (cloud.has_colors())
      for (int k = 0; k < 3; ++k) put<float>(os, static_cast<float>(cloud.colors[i](k)));
  }
  if (!os) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

cloud::PointCloud read_cloud(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  const auto n = get<std::uint32_t>(is, path);
  const bool rgb = get<std::uint8_t>(is, path) != 0;
  cloud::PointCloud c;
  c.points.resize(n);
  if (rgb) c.colors.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) c.points[i](k) = get<float>(is, path);
    if (rgb)
      for (int k = 0; k < 3; ++k) c.colors[i](k) = get<float>(is, path);
  }
  return c;
}

nlohmann::json features_to_json(const std::vector<visual::VisualFeature>& features) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : features) {
    nlohmann::json j;
    j["pixel"] = {f.pixel.x(), f.pixel.y()};
    j["descriptor"] = f.descriptor.to_hex();
    j["response"] = f.response;
    j["depth"] = f.depth ? nlohmann::json(*f.depth) : nlohmann::json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<visual::VisualFeature> features_from_json(const nlohmann::json& j,
                                                      const visual::CameraIntrinsics& intr) {
  std::vector<visual::VisualFeature> out;
  try {
    for (const auto& e : j) {
      std::optional<double> depth;
      if (!e.at("depth").is_null()) depth = e.at("depth").get<double>();
      const geom::Vec2 px(e.at("pixel").at(0).get<double>(), e.at("pixel").at(1).get<double>());
      out.push_back(visual::VisualFeature::make(
          px, visual::BinaryDescriptor::from_hex(e.at("descriptor").get<std::string>()),
          e.at("response").get<double>(), depth, intr));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kIo, std::string("malformed feature table: ") + ex.what());
  }
  return out;
}

std::string format_pose_line(double t, const geom::Pose3& p) {
  const auto& q = p.rotation();
  const auto& x = p.translation();
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g", t, x.x(),
                x.y(), x.z(), q.x(), q.y(), q.z(), q.w());
  return buf;
}

void write_trajectory(const fs::path& path, const std::vector<StampedPose>& traj) {
  std::string text;
  for (const auto& s : traj) text += format_pose_line(s.t, s.pose) + "\n";
  write_text(path, text);
}

std::vector<StampedPose> read_trajectory(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<StampedPose> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ls >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw Error(ErrorCode::kIo, "malformed pose line in " + path.string() + ": " + line);
    out.push_back({t, geom::Pose3(geom::Quat(qw, qx, qy, qz), geom::Vec3(tx, ty, tz))});
  }
  return out;
}

nlohmann::json pose_to_json(const geom::Pose3& p) {
  const auto& q = p.rotation();
  const auto& t = p.translation();
  return {{"t", {t.x(), t.y(), t.z()}}, {"q", {q.x(), q.y(), q.z(), q.w()}}};
}

geom::Pose3 pose_from_json(const nlohmann::json& j) {
  const auto& t = j.at("t");
  const auto& q = j.at("q");
  return geom::Pose3(geom::Quat(q.at(3).get<double>(), q.at(0).get<double>(), q.at(1).get<double>(),
                                q.at(2).get<double>()),
                     geom::Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>()));
}

nlohmann::json cov_to_json(const geom::Cov6& c) {
  nlohmann::json arr = nlohmann::json::array();
  for (int r = 0; r < 6; ++r)
    for (int k = 0; k < 6; ++k) arr.push_back(c(r, k));
  return arr;
}

geom::Cov6 cov_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 36) throw Error(ErrorCode::kIo, "covariance needs 36 entries");
  geom::Cov6 c;
  for (int r = 0; r < 6; ++r)
    for (int k = 0; k < 6; ++k) c(r, k) = j[static_cast<std::size_t>(6 * r + k)].get<double>();
  return c;
}

nlohmann::json intrinsics_to_json(const visual::CameraIntrinsics& intr) {
  return {{"fx", intr.fx}, {"fy", intr.fy},       {"cx", intr.cx},
          {"cy", intr.cy}, {"width", intr.width}, {"height", intr.height}};
}

visual::CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  visual::CameraIntrinsics intr;
  intr.fx = j.at("fx").get<double>();
  intr.fy = j.at("fy").get<double>();
  intr.cx = j.at("cx").get<double>();
  intr.cy = j.at("cy").get<double>();
  intr.width = j.at("width").get<int>();
  intr.height = j.at("height").get<int>();
  intr.validate();
  return intr;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  os << text;
  if (!os) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace mmslam::io
