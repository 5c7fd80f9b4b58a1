#include <algorithm>
#include <cmath>

#include "mmslam/error.hpp"
#include "mmslam/submap/submap.hpp"

namespace mmslam::submap {

std::vector<visual::VisualFeature> bucket_features(const std::vector<visual::VisualFeature>& features,
                                                   const visual::CameraIntrinsics& intr, int cols,
                                                   int rows, std::size_t per_cell_max) {
  if (cols < 1 || rows < 1) throw Error(ErrorCode::kInvalidArgument, "bucket grid must be >= 1x1");
  const auto cells = static_cast<std::size_t>(cols * rows);
  std::vector<std::vector<std::size_t>> buckets(cells);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& px = features[i].pixel;
    const int c = std::clamp(static_cast<int>(std::floor(px.x() * cols / intr.width)), 0, cols - 1);
    const int r = std::clamp(static_cast<int>(std::floor(px.y() * rows / intr.height)), 0, rows - 1);
    buckets[static_cast<std::size_t>(r * cols + c)].push_back(i);
  }
  std::vector<visual::VisualFeature> out;
  for (auto& b : buckets) {
    std::stable_sort(b.begin(), b.end(), [&](std::size_t x, std::size_t y) {
      return features[x].response > features[y].response;
    });
    const std::size_t keep = std::min(per_cell_max, b.size());
    for (std::size_t k = 0; k < keep; ++k) out.push_back(features[b[k]]);
  }
  return out;
}

}  // namespace mmslam::submap
