#include <filesystem>
#include <thread>
#include <vector>

#include "doctest.h"
#include "mmslam/error.hpp"
#include "mmslam/submap/submap.hpp"
#include "support.hpp"

using namespace mmslam;
using namespace mmslam::submap;
using geom::Vec3;

namespace {

visual::VisualFeature feature(double u, double v, double response) {
  visual::VisualFeature f;
  f.pixel = {u, v};
  f.response = response;
  return f;
}

cloud::PointCloud small_cloud() {
  cloud::PointCloud c;
  for (int i = 0; i < 10; ++i) c.points.emplace_back(1.0 + 0.1 * i, 0.0, -1.0);
  return c;
}

// Straight drive along x with 0.25 m steps; positional variance grows by
// sigma_per_step^2 per step, rotation is exact.
geom::PoseWithCov vio_at(int k, double sigma_per_step = 0.01) {
  geom::PoseWithCov p;
  p.pose = geom::Pose3(geom::Quat::Identity(), Vec3(0.25 * k, 0.0, 0.0));
  p.cov = geom::Cov6::Zero();
  p.cov.bottomRightCorner<3, 3>() = geom::Mat3::Identity() * (sigma_per_step * sigma_per_step * (k + 1));
  return p;
}

}  // namespace

TEST_SUITE("submap") {

TEST_CASE("bucketing keeps the strongest features per cell") {
  const visual::CameraIntrinsics intr;
  std::vector<visual::VisualFeature> fs;
  for (int i = 0; i < 12; ++i) fs.push_back(feature(10.0, 10.0, i));    // cell (0, 0)
  for (int i = 0; i < 3; ++i) fs.push_back(feature(630.0, 470.0, i));   // last cell
  fs.push_back(feature(700.0, -5.0, 100.0));                           // clamped into cell (7, 0)
  const auto out = bucket_features(fs, intr, 8, 6, 5);
  REQUIRE(out.size() == 9);
  for (int i = 0; i < 5; ++i) CHECK(out[static_cast<std::size_t>(i)].response == 11 - i);
  CHECK(out[5].response == 100.0);
  CHECK(out[6].response == 2.0);
  CHECK(out[8].response == 0.0);
  CHECK_THROWS_AS(bucket_features(fs, intr, 0, 6, 5), Error);
}

TEST_CASE("builder closes submaps at the path limit") {
  BuildConfig cfg;
  SubmapBuilder b(cfg);
  const visual::CameraIntrinsics intr;
  std::vector<Submap> done;
  std::vector<bool> kf;
  for (int k = 0; k < 60; ++k) {
    auto ev = b.ingest_frame(static_cast<std::size_t>(k), 0.5 * k, vio_at(k), small_cloud(), {}, intr);
    kf.push_back(ev.keyframe_created);
    if (ev.finalized) done.push_back(std::move(*ev.finalized));
  }
  if (auto last = b.flush()) done.push_back(std::move(*last));
  REQUIRE(done.size() == 3);
  // The frame whose path would reach 7 m opens the next submap.
  CHECK(done[0].frames.size() == 28);
  CHECK(done[1].frames.front().frame_index == 28);
  CHECK(done[0].travelled_path == doctest::Approx(6.75));
  CHECK(done[1].origin_in_world.pose.translation().x() == doctest::Approx(7.0));
  for (std::size_t i = 0; i < done.size(); ++i) {
    CHECK(done[i].id == i);
    REQUIRE(!done[i].keyframes.empty());
    CHECK(done[i].keyframes.front().frame_index == done[i].frames.front().frame_index);
    CHECK(done[i].frames.front().pose_in_submap.translation().norm() == 0.0);
  }
  // Keyframes every 0.5 m within a submap.
  CHECK(done[0].keyframes.size() == 14);
  CHECK(done[0].keyframes[1].frame_index == 2);
  // Cloud stored in the submap frame.
  CHECK(cloud::bounds(done[1].cloud).min.x() == doctest::Approx(1.0));
  CHECK(b.finalized_count() == 3);
}

TEST_CASE("builder closes submaps at the uncertainty limit") {
  BuildConfig cfg;
  cfg.max_pose_sigma = 0.199;
  SubmapBuilder b(cfg);
  const visual::CameraIntrinsics intr;
  std::size_t first = 0;
  for (int k = 0; k < 20; ++k) {
    auto ev = b.ingest_frame(static_cast<std::size_t>(k), k, vio_at(k, 0.05), {}, {}, intr);
    if (ev.finalized) {
      first = ev.finalized->frames.size();
      break;
    }
  }
  // Relative sigma after m steps is 0.05 sqrt(m): 0.194 at m = 15, 0.2 at m = 16.
  CHECK(first == 16);
}

TEST_CASE("non-finite odometry drops the frame") {
  SubmapBuilder b(BuildConfig{});
  auto v = vio_at(0);
  v.cov(0, 0) = std::numeric_limits<double>::quiet_NaN();
  const auto ev = b.ingest_frame(0, 0.0, v, {}, {}, visual::CameraIntrinsics{});
  CHECK(ev.dropped);
  CHECK(!b.flush());
}

TEST_CASE("origin is gravity aligned") {
  SubmapBuilder b(BuildConfig{});
  geom::PoseWithCov v;
  v.pose = geom::from_ypr(0.7, 0.1, -0.05, Vec3(1, 2, 3));
  b.ingest_frame(0, 0.0, v, {}, {}, visual::CameraIntrinsics{});
  const auto s = b.flush();
  REQUIRE(s);
  CHECK(std::abs(geom::roll_pitch(s->origin_in_world.pose).pitch) < 1e-12);
  CHECK(geom::yaw(s->origin_in_world.pose) == doctest::Approx(0.7));
  CHECK((s->origin_in_world.pose * s->frames[0].pose_in_submap).matrix().isApprox(v.pose.matrix(), 1e-12));
}

TEST_CASE("increment covariance inverts propagation") {
  sim::Rng rng(1);
  const geom::PoseWithCov a{testing::random_pose(rng), testing::random_spd(rng)};
  const geom::PoseWithCov d{testing::random_pose(rng, 1.0), testing::random_spd(rng)};
  const auto b = geom::propagate_cov(a, d);
  CHECK((increment_cov(a, b) - d.cov).norm() < 1e-12);
}

TEST_CASE("keypoints are extracted once under concurrent access") {
  Submap s;
  for (double x = -2; x <= 2; x += 0.05)
    for (double y = -2; y <= 2; y += 0.05) {
      const double r2 = x * x + y * y;
      s.cloud.points.emplace_back(x, y, r2 < 0.25 ? 0.3 * std::sqrt(0.25 - r2) : 0.0);
    }
  const Keypoint3DConfig cfg;
  std::vector<std::thread> ts;
  std::vector<std::size_t> sizes(4);
  for (int i = 0; i < 4; ++i) ts.emplace_back([&, i] { sizes[static_cast<std::size_t>(i)] = s.keypoints3d(cfg).size(); });
  for (auto& t : ts) t.join();
  CHECK(s.keypoint_extractions() == 1);
  CHECK(s.keypoints_cached());
  for (auto n : sizes) CHECK(n == sizes[0]);
  // Copies share the cache.
  const Submap copy = s;
  copy.keypoints3d(cfg);
  CHECK(copy.keypoint_extractions() == 1);
}

TEST_CASE("submap directory round trip") {
  sim::Rng rng(2);
  Submap s;
  s.id = 4;
  s.origin_in_world = {testing::random_pose(rng), testing::random_spd(rng)};
  s.cloud = small_cloud();
  s.travelled_path = 3.25;
  s.frames.push_back({7, 3.5, testing::random_pose(rng)});
  const visual::CameraIntrinsics intr;
  Keyframe kf;
  kf.id = 9;
  kf.frame_index = 7;
  kf.timestamp = 3.5;
  kf.pose_in_submap = {testing::random_pose(rng), testing::random_spd(rng)};
  visual::BinaryDescriptor d;
  d.bits = {1, 2, 3, 4};
  kf.features.push_back(visual::VisualFeature::make({10.5, 20.25}, d, 0.5, 2.0, intr));
  kf.features.push_back(visual::VisualFeature::make({30, 40}, d, 0.25, std::nullopt, intr));
  s.keyframes.push_back(kf);
  const auto dir = std::filesystem::temp_directory_path() / "mmslam_submap_test";
  std::filesystem::remove_all(dir);
  write_submap(dir, s);
  const auto r = read_submap(dir, intr);
  CHECK(r.id == 4);
  CHECK(r.origin_in_world.pose.matrix() == s.origin_in_world.pose.matrix());
  CHECK(r.origin_in_world.cov == s.origin_in_world.cov);
  CHECK(r.travelled_path == 3.25);
  REQUIRE(r.cloud.size() == s.cloud.size());
  for (std::size_t i = 0; i < r.cloud.size(); ++i)
    CHECK((r.cloud.points[i] - s.cloud.points[i]).norm() < 1e-6);  // float32 storage
  REQUIRE(r.keyframes.size() == 1);
  CHECK(r.keyframes[0].pose_in_submap.pose.matrix() == kf.pose_in_submap.pose.matrix());
  REQUIRE(r.keyframes[0].features.size() == 2);
  CHECK(r.keyframes[0].features[0].descriptor == d);
  CHECK(*r.keyframes[0].features[0].depth == 2.0);
  CHECK(!r.keyframes[0].features[1].depth);
  CHECK(r.frames[0].frame_index == 7);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
