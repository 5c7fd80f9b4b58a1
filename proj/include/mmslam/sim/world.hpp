#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmslam/visual/types.hpp"

namespace mmslam::sim {

using geom::Vec2;
using geom::Vec3;

// Region character. Mixed puts rocks (structure) at x < 0 and landmarks
// (texture) at x >= 0; combined puts both everywhere.
enum class WorldKind { kStructureRich, kTextureRich, kMixed, kCombined };

std::string to_string(WorldKind k);
WorldKind world_kind_from_string(const std::string& s);  // throws Error(kConfig)

struct WorldConfig {
  WorldKind kind = WorldKind::kMixed;
  double half_extent = 14.0;           // world is [-e, e]^2, m
  double terrain_amplitude = 0.08;     // m, per sinusoid
  int terrain_waves = 5;
  double min_wavelength = 6.0;         // m
  double max_wavelength = 18.0;        // m
  double rock_density = 0.35;          // rocks per m^2 inside structure zones
  double rock_radius_min = 0.25;       // m
  double rock_radius_max = 0.6;        // m
  double rock_height_min = 0.4;        // fraction of radius
  double rock_height_max = 0.9;
  double landmark_density = 5.0;       // per m^2 inside texture zones
  double landmark_lift = 0.02;         // m above the surface
  int min_descriptor_distance = 80;    // pairwise Hamming at generation

  void validate() const;
};

struct Rock {
  Vec2 center = Vec2::Zero();
  double radius = 0.5;
  double height = 0.3;
  std::uint64_t shape_seed = 0;
  std::array<double, 3> harmonic_amp{};    // radial modulation per harmonic 2..4
  std::array<double, 3> harmonic_phase{};

  // Height of the rock above the terrain at (x, y); 0 outside its footprint.
  double bump(double x, double y) const;
  double max_radius() const;
};

struct Landmark {
  Vec3 position = Vec3::Zero();
  visual::BinaryDescriptor descriptor;
  double response = 0.0;
};

struct TerrainWave {
  double amplitude = 0.0;
  Vec2 k = Vec2::Zero();  // rad/m
  double phase = 0.0;
};

class WorldModel {
 public:
  static WorldModel generate(std::uint64_t seed, const WorldConfig& cfg);

  const WorldConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<TerrainWave>& waves() const { return waves_; }
  const std::vector<Rock>& rocks() const { return rocks_; }
  const std::vector<Landmark>& landmarks() const { return landmarks_; }

  double terrain_height(double x, double y) const;
  // Terrain plus the tallest rock covering (x, y).
  double surface_height(double x, double y) const;
  bool in_bounds(double x, double y) const;

  bool structure_zone(double x) const;
  bool texture_zone(double x) const;

 private:
  void index_rocks();

  WorldConfig cfg_;
  std::uint64_t seed_ = 0;
  std::vector<TerrainWave> waves_;
  std::vector<Rock> rocks_;
  std::vector<Landmark> landmarks_;
  // Uniform grid over rock footprints for surface queries.
  double cell_ = 1.0;
  int grid_n_ = 0;
  std::vector<std::vector<std::uint32_t>> grid_;
};

// A world file stores the seed and the config; the geometry is regenerated.
nlohmann::json world_to_json(const WorldModel& w);
WorldModel world_from_json(const nlohmann::json& j);  // throws Error(kConfig)

}  // namespace mmslam::sim
