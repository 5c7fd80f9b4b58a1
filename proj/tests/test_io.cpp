#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mmslam/error.hpp"
#include "mmslam/io/formats.hpp"
#include "support.hpp"

using namespace mmslam;
using geom::Vec3;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "mmslam_io_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("cloud round trip") {
  cloud::PointCloud c;
  c.points = {Vec3(1.5, -2.25, 0.125), Vec3(0, 0, 0), Vec3(1e3, -7.0, 3.0)};
  const auto p = scratch("plain.bin");
  io::write_cloud(p, c);
  auto r = io::read_cloud(p);
  CHECK(r.points == c.points);
  CHECK(!r.has_colors());
  CHECK(std::filesystem::file_size(p) == 4 + 1 + 3 * 12);

  c.colors = {Vec3(1, 0, 0), Vec3(0, 0.5, 0), Vec3(0, 0, 0.25)};
  io::write_cloud(p, c);
  r = io::read_cloud(p);
  CHECK(r.colors == c.colors);

  // Non-float values come back rounded to float32.
  cloud::PointCloud d;
  d.points = {Vec3(0.1, 0.2, 0.3)};
  io::write_cloud(p, d);
  CHECK(io::read_cloud(p).points[0] == Vec3(double(0.1f), double(0.2f), double(0.3f)));

  // Truncated file.
  std::filesystem::resize_file(p, 7);
  CHECK(code_of([&] { io::read_cloud(p); }) == ErrorCode::kIo);
  CHECK(code_of([&] { io::read_cloud(scratch("absent.bin")); }) == ErrorCode::kIo);
}

TEST_CASE("feature table round trip") {
  const visual::CameraIntrinsics intr;
  visual::BinaryDescriptor d;
  d.bits = {0x0123456789abcdefULL, 0, ~0ULL, 42};
  std::vector<visual::VisualFeature> fs{visual::VisualFeature::make({100.25, 200.5}, d, 0.75, 3.5, intr),
                                        visual::VisualFeature::make({1, 2}, d, 0.0, std::nullopt, intr)};
  const auto j = io::features_to_json(fs);
  CHECK(j[0]["descriptor"].get<std::string>().size() == 64);
  CHECK(j[1]["depth"].is_null());
  const auto r = io::features_from_json(nlohmann::json::parse(j.dump()), intr);
  REQUIRE(r.size() == 2);
  CHECK(r[0].pixel == fs[0].pixel);
  CHECK(r[0].descriptor == d);
  CHECK(r[0].depth == 3.5);
  CHECK(r[0].landmark->z() == doctest::Approx(3.5).epsilon(1e-12));
  CHECK(*r[0].landmark == *fs[0].landmark);
  CHECK(!r[1].depth);
  CHECK(!r[1].landmark);
}

TEST_CASE("trajectory text round trip") {
  sim::Rng rng(1);
  std::vector<io::StampedPose> traj;
  for (int i = 0; i < 20; ++i) traj.push_back({0.1 * i + 1e-13, testing::random_pose(rng, 100.0)});
  const auto p = scratch("traj.txt");
  io::write_trajectory(p, traj);
  const auto r = io::read_trajectory(p);
  REQUIRE(r.size() == traj.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r[i].t == traj[i].t);
    CHECK(r[i].pose.translation() == traj[i].pose.translation());
    CHECK(r[i].pose.rotation().coeffs() == traj[i].pose.rotation().coeffs());
  }
  // Comments are skipped; eight fields per line.
  io::write_text(p, "# t tx ty tz qx qy qz qw\n0 1 2 3 0 0 0 1\n");
  CHECK(io::read_trajectory(p).size() == 1);
  io::write_text(p, "0 1 2 3 0 0 0\n");
  CHECK(code_of([&] { io::read_trajectory(p); }) == ErrorCode::kIo);
  CHECK(io::format_pose_line(0.5, geom::Pose3()) == "0.5 0 0 0 0 0 0 1");
}

TEST_CASE("pose, covariance and intrinsics json") {
  sim::Rng rng(2);
  const auto pose = testing::random_pose(rng);
  const auto rp = io::pose_from_json(nlohmann::json::parse(io::pose_to_json(pose).dump()));
  CHECK(rp.translation() == pose.translation());
  CHECK(rp.rotation().coeffs() == pose.rotation().coeffs());

  const auto cov = testing::random_spd(rng);
  const auto jc = io::cov_to_json(cov);
  CHECK(jc.size() == 36);
  CHECK(jc[1].get<double>() == cov(0, 1));
  CHECK(io::cov_from_json(nlohmann::json::parse(jc.dump())) == cov);
  CHECK_THROWS_AS(io::cov_from_json(nlohmann::json::array({1, 2, 3})), Error);

  visual::CameraIntrinsics intr;
  intr.fx = 512.5;
  intr.width = 800;
  const auto ri = io::intrinsics_from_json(io::intrinsics_to_json(intr));
  CHECK(ri.fx == 512.5);
  CHECK(ri.width == 800);
  CHECK(ri.cy == intr.cy);
}

}  // TEST_SUITE
