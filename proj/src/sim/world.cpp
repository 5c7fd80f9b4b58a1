#include "mmslam/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mmslam/error.hpp"
#include "mmslam/sim/random.hpp"

namespace mmslam::sim {

std::string to_string(WorldKind k) {
  switch (k) {
    case WorldKind::kStructureRich: return "structure";
    case WorldKind::kTextureRich: return "texture";
    case WorldKind::kMixed: return "mixed";
    case WorldKind::kCombined: return "combined";
  }
  return "mixed";
}

WorldKind world_kind_from_string(const std::string& s) {
  if (s == "structure") return WorldKind::kStructureRich;
  if (s == "texture" || s == "flat") return WorldKind::kTextureRich;
  if (s == "mixed") return WorldKind::kMixed;
  if (s == "combined") return WorldKind::kCombined;
  throw Error(ErrorCode::kConfig, "unknown world kind '" + s + "'");
}

void WorldConfig::validate() const {
  if (!(half_extent > 0 && terrain_amplitude >= 0 && terrain_waves >= 0 && min_wavelength > 0 &&
        max_wavelength >= min_wavelength && rock_density >= 0 && rock_radius_min > 0 &&
        rock_radius_max >= rock_radius_min && rock_height_min > 0 &&
        rock_height_max >= rock_height_min && landmark_density >= 0 && landmark_lift >= 0 &&
        min_descriptor_distance >= 0 && min_descriptor_distance <= 128))
    throw Error(ErrorCode::kConfig, "invalid world config");
}

double Rock::max_radius() const {
  double s = 1.0;
  for (double a : harmonic_amp) s += a;
  return radius * s;
}

double Rock::bump(double x, double y) const {
  const double dx = x - center.x();
  const double dy = y - center.y();
  const double d2 = dx * dx + dy * dy;
  const double rmax = max_radius();
  if (d2 >= rmax * rmax) return 0.0;
  const double theta = std::atan2(dy, dx);
  double rho = 1.0;
  for (std::size_t i = 0; i < harmonic_amp.size(); ++i)
    rho += harmonic_amp[i] * std::cos(static_cast<double>(i + 2) * theta + harmonic_phase[i]);
  rho *= radius;
  const double s2 = d2 / (rho * rho);
  if (s2 >= 1.0) return 0.0;
  return height * std::sqrt(1.0 - s2);
}

bool WorldModel::structure_zone(double x) const {
  switch (cfg_.kind) {
    case WorldKind::kStructureRich:
    case WorldKind::kCombined: return true;
    case WorldKind::kTextureRich: return false;
    case WorldKind::kMixed: return x < 0.0;
  }
  return false;
}

bool WorldModel::texture_zone(double x) const {
  switch (cfg_.kind) {
    case WorldKind::kTextureRich:
    case WorldKind::kCombined: return true;
    case WorldKind::kStructureRich: return false;
    case WorldKind::kMixed: return x >= 0.0;
  }
  return false;
}

WorldModel WorldModel::generate(std::uint64_t seed, const WorldConfig& cfg) {
  cfg.validate();
  WorldModel w;
  w.cfg_ = cfg;
  w.seed_ = seed;
  const double e = cfg.half_extent;

  Rng terrain_rng(mix_seed(seed, 1));
  for (int i = 0; i < cfg.terrain_waves; ++i) {
    TerrainWave wave;
    const double lambda = terrain_rng.uniform(cfg.min_wavelength, cfg.max_wavelength);
    const double dir = terrain_rng.uniform(0.0, 2.0 * std::numbers::pi);
    wave.k = (2.0 * std::numbers::pi / lambda) * Vec2(std::cos(dir), std::sin(dir));
    wave.amplitude = cfg.terrain_amplitude * terrain_rng.uniform(0.5, 1.0);
    wave.phase = terrain_rng.uniform(0.0, 2.0 * std::numbers::pi);
    w.waves_.push_back(wave);
  }

  // Zone extents along x; y always spans the whole world.
  auto zone_x = [&](bool structure) -> std::pair<double, double> {
    switch (cfg.kind) {
      case WorldKind::kMixed: return structure ? std::pair{-e, 0.0} : std::pair{0.0, e};
      case WorldKind::kStructureRich: return structure ? std::pair{-e, e} : std::pair{0.0, 0.0};
      case WorldKind::kTextureRich: return structure ? std::pair{0.0, 0.0} : std::pair{-e, e};
      case WorldKind::kCombined: return {-e, e};
    }
    return {0.0, 0.0};
  };

  Rng rock_rng(mix_seed(seed, 2));
  const auto [rx0, rx1] = zone_x(true);
  const auto n_rocks = rock_rng.poisson(cfg.rock_density * (rx1 - rx0) * 2.0 * e);
  for (std::uint64_t i = 0; i < n_rocks; ++i) {
    Rock r;
    r.radius = rock_rng.uniform(cfg.rock_radius_min, cfg.rock_radius_max);
    r.height = r.radius * rock_rng.uniform(cfg.rock_height_min, cfg.rock_height_max);
    r.shape_seed = rock_rng.bits();
    Rng shape(r.shape_seed);
    for (std::size_t h = 0; h < r.harmonic_amp.size(); ++h) {
      r.harmonic_amp[h] = shape.uniform(0.0, 0.12);
      r.harmonic_phase[h] = shape.uniform(0.0, 2.0 * std::numbers::pi);
    }
    const double m = r.max_radius();
    r.center = Vec2(rock_rng.uniform(rx0 + m, rx1 - m), rock_rng.uniform(-e + m, e - m));
    if (rx1 - rx0 > 2.0 * m) w.rocks_.push_back(r);
  }
  w.index_rocks();

  Rng lm_rng(mix_seed(seed, 3));
  const auto [lx0, lx1] = zone_x(false);
  const auto n_lm = lm_rng.poisson(cfg.landmark_density * (lx1 - lx0) * 2.0 * e);
  for (std::uint64_t i = 0; i < n_lm; ++i) {
    Landmark lm;
    const double x = lm_rng.uniform(lx0, lx1);
    const double y = lm_rng.uniform(-e, e);
    lm.position = Vec3(x, y, w.surface_height(x, y) + cfg.landmark_lift);
    lm.response = lm_rng.uniform();
    for (int attempt = 0;; ++attempt) {
      for (auto& word : lm.descriptor.bits) word = lm_rng.bits();
      const bool distinct = std::all_of(w.landmarks_.begin(), w.landmarks_.end(), [&](const Landmark& o) {
        return visual::hamming(o.descriptor, lm.descriptor) >= cfg.min_descriptor_distance;
      });
      if (distinct) break;
      if (attempt > 1000) throw Error(ErrorCode::kConfig, "cannot draw distinct landmark descriptors");
    }
    w.landmarks_.push_back(lm);
  }
  return w;
}

void WorldModel::index_rocks() {
  cell_ = 1.0;
  grid_n_ = static_cast<int>(std::ceil(2.0 * cfg_.half_extent / cell_));
  grid_.assign(static_cast<std::size_t>(grid_n_ * grid_n_), {});
  for (std::uint32_t i = 0; i < rocks_.size(); ++i) {
    const Rock& r = rocks_[i];
    const double m = r.max_radius();
    const int x0 = std::clamp(static_cast<int>(std::floor((r.center.x() - m + cfg_.half_extent) / cell_)), 0, grid_n_ - 1);
    const int x1 = std::clamp(static_cast<int>(std::floor((r.center.x() + m + cfg_.half_extent) / cell_)), 0, grid_n_ - 1);
    const int y0 = std::clamp(static_cast<int>(std::floor((r.center.y() - m + cfg_.half_extent) / cell_)), 0, grid_n_ - 1);
    const int y1 = std::clamp(static_cast<int>(std::floor((r.center.y() + m + cfg_.half_extent) / cell_)), 0, grid_n_ - 1);
    for (int gy = y0; gy <= y1; ++gy)
      for (int gx = x0; gx <= x1; ++gx) grid_[static_cast<std::size_t>(gy * grid_n_ + gx)].push_back(i);
  }
}

double WorldModel::terrain_height(double x, double y) const {
  double h = 0.0;
  for (const auto& wv : waves_) h += wv.amplitude * std::sin(wv.k.x() * x + wv.k.y() * y + wv.phase);
  return h;
}

double WorldModel::surface_height(double x, double y) const {
  double bump = 0.0;
  const int gx = static_cast<int>(std::floor((x + cfg_.half_extent) / cell_));
  const int gy = static_cast<int>(std::floor((y + cfg_.half_extent) / cell_));
  if (gx >= 0 && gy >= 0 && gx < grid_n_ && gy < grid_n_)
    for (std::uint32_t i : grid_[static_cast<std::size_t>(gy * grid_n_ + gx)])
      bump = std::max(bump, rocks_[i].bump(x, y));
  return terrain_height(x, y) + bump;
}

bool WorldModel::in_bounds(double x, double y) const {
  return std::abs(x) <= cfg_.half_extent && std::abs(y) <= cfg_.half_extent;
}

nlohmann::json world_to_json(const WorldModel& w) {
  const WorldConfig& c = w.config();
  std::size_t rocks_s = 0, rocks_t = 0, lm_s = 0, lm_t = 0;
  for (const auto& r : w.rocks()) (w.structure_zone(r.center.x()) ? rocks_s : rocks_t)++;
  for (const auto& l : w.landmarks()) (w.texture_zone(l.position.x()) ? lm_t : lm_s)++;
  return {{"format", "mmslam-world-1"},
          {"seed", w.seed()},
          {"config",
           {{"kind", to_string(c.kind)},
            {"half_extent", c.half_extent},
            {"terrain_amplitude", c.terrain_amplitude},
            {"terrain_waves", c.terrain_waves},
            {"min_wavelength", c.min_wavelength},
            {"max_wavelength", c.max_wavelength},
            {"rock_density", c.rock_density},
            {"rock_radius_min", c.rock_radius_min},
            {"rock_radius_max", c.rock_radius_max},
            {"rock_height_min", c.rock_height_min},
            {"rock_height_max", c.rock_height_max},
            {"landmark_density", c.landmark_density},
            {"landmark_lift", c.landmark_lift},
            {"min_descriptor_distance", c.min_descriptor_distance}}},
          {"summary",
           {{"rocks_in_structure_zone", rocks_s},
            {"rocks_elsewhere", rocks_t},
            {"landmarks_in_texture_zone", lm_t},
            {"landmarks_elsewhere", lm_s}}}};
}

WorldModel world_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "mmslam-world-1")
      throw Error(ErrorCode::kConfig, "unknown world format");
    const auto& c = j.at("config");
    WorldConfig cfg;
    cfg.kind = world_kind_from_string(c.at("kind").get<std::string>());
    cfg.half_extent = c.at("half_extent").get<double>();
    cfg.terrain_amplitude = c.at("terrain_amplitude").get<double>();
    cfg.terrain_waves = c.at("terrain_waves").get<int>();
    cfg.min_wavelength = c.at("min_wavelength").get<double>();
    cfg.max_wavelength = c.at("max_wavelength").get<double>();
    cfg.rock_density = c.at("rock_density").get<double>();
    cfg.rock_radius_min = c.at("rock_radius_min").get<double>();
    cfg.rock_radius_max = c.at("rock_radius_max").get<double>();
    cfg.rock_height_min = c.at("rock_height_min").get<double>();
    cfg.rock_height_max = c.at("rock_height_max").get<double>();
    cfg.landmark_density = c.at("landmark_density").get<double>();
    cfg.landmark_lift = c.at("landmark_lift").get<double>();
    cfg.min_descriptor_distance = c.at("min_descriptor_distance").get<int>();
    return WorldModel::generate(j.at("seed").get<std::uint64_t>(), cfg);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("world file: ") + e.what());
  }
}

}  // namespace mmslam::sim
