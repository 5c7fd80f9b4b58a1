#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mmslam/error.hpp"
#include "mmslam/io/formats.hpp"
#include "mmslam/pipeline/config.hpp"
#include "mmslam/pipeline/session.hpp"
#include "mmslam/sim/metrics.hpp"
#include "mmslam/sim/simulator.hpp"

namespace fs = std::filesystem;
using namespace mmslam;

namespace {

enum Exit { kOk = 0, kConfigError = 1, kIoError = 2, kEvalError = 3 };

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::kIo:
      return kIoError;
    case ErrorCode::kPrecondition:
    case ErrorCode::kIdMismatch:
      return kEvalError;
    default:
      return kConfigError;
  }
}

const char* const kArms[] = {"none", "3d", "kf", "3d+kf"};

pipeline::SessionConfig session_config(const std::string& path, const std::string& matching,
                                       std::optional<std::uint64_t> seed) {
  pipeline::SessionConfig cfg = path.empty() ? pipeline::SessionConfig{} : pipeline::load_config(path);
  if (!matching.empty()) cfg.matching = pipeline::matching_from_string(matching);
  if (seed) cfg.seed = *seed;
  cfg.validate();
  return cfg;
}

std::optional<visual::Vocabulary> load_vocab(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return visual::Vocabulary::load(path);
}

pipeline::SessionResult run_arm(const sim::Dataset& ds, pipeline::SessionConfig cfg, pipeline::Matching m,
                                const std::optional<visual::Vocabulary>& vocab) {
  cfg.matching = m;
  if (pipeline::uses_kf(m) && !vocab)
    throw Error(ErrorCode::kConfig, "keyframe matching needs --vocab");
  return pipeline::run_session(ds, cfg, vocab ? &*vocab : nullptr);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_positions_csv(const fs::path& path, const std::vector<io::StampedPose>& traj) {
  std::string s = "t,x,y,z\n";
  char buf[160];
  for (const auto& p : traj) {
    const auto& t = p.pose.translation();
    std::snprintf(buf, sizeof(buf), "%.6f,%.9g,%.9g,%.9g\n", p.t, t.x(), t.y(), t.z());
    s += buf;
  }
  io::write_text(path, s);
}

nlohmann::json metrics_json(const sim::Metrics& m) {
  return {{"rmse_pos", m.rmse_pos}, {"rmse_z", m.rmse_z}, {"rmse_angle", m.rmse_angle},
          {"count", m.count},       {"n_matches", m.n_matches}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-modal submap SLAM: simulator, pipeline and evaluation"};
  app.require_subcommand(1);

  // gen-world
  auto* gen = app.add_subcommand("gen-world", "Generate a synthetic world file");
  std::uint64_t world_seed = 1;
  std::string world_kind = "mixed";
  std::string world_out;
  sim::WorldConfig wcfg;
  gen->add_option("--seed", world_seed, "World seed")->required();
  gen->add_option("--kind", world_kind, "structure | texture | mixed | combined")->capture_default_str();
  gen->add_option("--half-extent", wcfg.half_extent, "World half size, m")->capture_default_str();
  gen->add_option("--rock-density", wcfg.rock_density, "Rocks per m^2 in structure zones")->capture_default_str();
  gen->add_option("--landmark-density", wcfg.landmark_density, "Landmarks per m^2 in texture zones")
      ->capture_default_str();
  gen->add_option("--out", world_out, "Output world JSON")->required();

  // simulate
  auto* simc = app.add_subcommand("simulate", "Drive a circuit through a world and record a dataset");
  std::string sim_world, sim_out;
  std::uint64_t sim_seed = 1;
  sim::TrajectorySpec traj;
  sim::SensorModel sensors;
  double cx = 0.0, cy = 0.0;
  bool zero_noise = false;
  simc->add_option("--world", sim_world, "World JSON from gen-world")->required();
  simc->add_option("--seed", sim_seed, "Sensor noise seed")->required();
  simc->add_option("--out", sim_out, "Output dataset directory")->required();
  simc->add_option("--center-x", cx, "Circuit center x, m")->capture_default_str();
  simc->add_option("--center-y", cy, "Circuit center y, m")->capture_default_str();
  simc->add_option("--radius", traj.radius, "Circuit radius, m")->capture_default_str();
  simc->add_option("--loops", traj.loops, "Number of laps")->capture_default_str();
  simc->add_option("--lap-offset", traj.lap_offset, "Radius increase per lap, m")->capture_default_str();
  simc->add_option("--step", traj.step, "Distance between frames, m")->capture_default_str();
  simc->add_option("--odo-sigma-trans", sensors.odo_sigma_trans)->capture_default_str();
  simc->add_option("--odo-sigma-rot", sensors.odo_sigma_rot)->capture_default_str();
  simc->add_option("--odo-sigma-yaw-per-m", sensors.odo_sigma_yaw_per_m)->capture_default_str();
  simc->add_option("--depth-noise-a", sensors.depth_noise_a)->capture_default_str();
  simc->add_option("--bit-flip-prob", sensors.bit_flip_prob)->capture_default_str();
  simc->add_option("--pixel-noise", sensors.pixel_noise)->capture_default_str();
  simc->add_flag("--zero-noise", zero_noise, "Disable every noise source");

  // build-vocab
  auto* voc = app.add_subcommand("build-vocab", "Train a binary vocabulary tree on a dataset");
  std::string voc_ds, voc_out;
  std::uint64_t voc_seed = 1;
  int voc_k = 10, voc_levels = 3;
  std::size_t voc_stride = 4;
  voc->add_option("--dataset", voc_ds, "Training dataset directory")->required();
  voc->add_option("--seed", voc_seed, "Clustering seed")->required();
  voc->add_option("--out", voc_out, "Output vocabulary file")->required();
  voc->add_option("--k", voc_k, "Branching factor")->capture_default_str();
  voc->add_option("--levels", voc_levels, "Tree depth")->capture_default_str();
  voc->add_option("--stride", voc_stride, "Use every n-th frame")->capture_default_str();

  // run
  auto* run = app.add_subcommand("run", "Run the SLAM pipeline on a dataset");
  std::string run_ds, run_cfg, run_vocab, run_out, run_matching;
  std::optional<std::uint64_t> run_seed;
  bool run_timing = false;
  run->add_option("--dataset", run_ds, "Dataset directory")->required();
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--config", run_cfg, "Key-value config file");
  run->add_option("--matching", run_matching, "none | 3d | kf | 3d+kf (overrides the config)");
  run->add_option("--vocab", run_vocab, "Vocabulary file (needed for kf matching)");
  run->add_option("--seed", run_seed, "RANSAC seed (overrides the config)");
  run->add_flag("--timing", run_timing, "Also write timing.json (not deterministic)");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a run against ground truth");
  std::string ev_ds, ev_run, ev_mode = "submaps", ev_out;
  double ev_window = 0.05;
  ev->add_option("--dataset", ev_ds, "Dataset directory")->required();
  ev->add_option("--run", ev_run, "Output directory of run")->required();
  ev->add_option("--mode", ev_mode, "submaps | dgps")->capture_default_str();
  ev->add_option("--window", ev_window, "dgps timestamp association window, s")->capture_default_str();
  ev->add_option("--out", ev_out, "Write metrics JSON here instead of stdout");

  // ablate
  auto* abl = app.add_subcommand("ablate", "Run the four matching arms and write a metrics table");
  std::string abl_ds, abl_cfg, abl_vocab, abl_out;
  std::optional<std::uint64_t> abl_seed;
  abl->add_option("--dataset", abl_ds, "Dataset directory")->required();
  abl->add_option("--vocab", abl_vocab, "Vocabulary file")->required();
  abl->add_option("--out", abl_out, "Output CSV")->required();
  abl->add_option("--config", abl_cfg, "Key-value config file");
  abl->add_option("--seed", abl_seed, "RANSAC seed (overrides the config)");

  // export-plot-data
  auto* plot = app.add_subcommand("export-plot-data", "Write trajectory CSVs for every arm");
  std::string plot_ds, plot_cfg, plot_vocab, plot_out;
  std::optional<std::uint64_t> plot_seed;
  plot->add_option("--dataset", plot_ds, "Dataset directory")->required();
  plot->add_option("--vocab", plot_vocab, "Vocabulary file")->required();
  plot->add_option("--out", plot_out, "Output directory")->required();
  plot->add_option("--config", plot_cfg, "Key-value config file");
  plot->add_option("--seed", plot_seed, "RANSAC seed (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) {
      wcfg.kind = sim::world_kind_from_string(world_kind);
      const auto w = sim::WorldModel::generate(world_seed, wcfg);
      io::write_text(world_out, sim::world_to_json(w).dump(1) + "\n");
    } else if (*simc) {
      const auto w = sim::world_from_json(nlohmann::json::parse(io::read_text(sim_world)));
      traj.center = {cx, cy};
      if (zero_noise) {
        sensors.odo_sigma_trans = sensors.odo_sigma_rot = sensors.odo_sigma_yaw_per_m = 0.0;
        sensors.depth_noise_a = sensors.bit_flip_prob = sensors.pixel_noise = 0.0;
      }
      sensors.validate();
      const auto gt = sim::plan_trajectory(w, traj);
      auto ds = sim::simulate_run(w, gt, traj.dt, sensors, sim_seed);
      ds.description = "world seed " + std::to_string(w.seed()) + " (" + sim::to_string(w.config().kind) +
                       "), sensor seed " + std::to_string(sim_seed) + "; synthetic scene scale";
      sim::write_dataset(sim_out, ds);
    } else if (*voc) {
      const auto ds = sim::read_dataset(voc_ds);
      pipeline::train_vocabulary(ds, voc_k, voc_levels, voc_seed, voc_stride).save(voc_out);
    } else if (*run) {
      const auto cfg = session_config(run_cfg, run_matching, run_seed);
      const auto vocab = load_vocab(run_vocab);
      const auto ds = sim::read_dataset(run_ds);
      const auto res = run_arm(ds, cfg, cfg.matching, vocab);
      pipeline::write_outputs(run_out, res, cfg, run_timing);
      io::write_text(fs::path(run_out) / "config.txt", pipeline::dump_config(cfg));
    } else if (*ev) {
      const auto ds = sim::read_dataset(ev_ds);
      sim::Metrics m;
      if (ev_mode == "submaps") {
        const auto subs = nlohmann::json::parse(io::read_text(fs::path(ev_run) / "submaps.json"));
        std::map<std::uint64_t, geom::Pose3> est, gt;
        for (const auto& s : subs) {
          const auto id = s.at("id").get<std::uint64_t>();
          const auto f = s.at("first_frame").get<std::size_t>();
          if (f >= ds.frames.size()) throw Error(ErrorCode::kPrecondition, "run does not match dataset");
          est[id] = io::pose_from_json(s.at("origin_estimate"));
          gt[id] = geom::gravity_aligned(ds.frames[f].gt);
        }
        m = sim::evaluate_submaps(est, gt);
        const auto stats = nlohmann::json::parse(io::read_text(fs::path(ev_run) / "stats.json"));
        m.n_matches = stats.at("n_matches").get<std::size_t>();
      } else if (ev_mode == "dgps") {
        const auto est = io::read_trajectory(fs::path(ev_run) / "trajectory.txt");
        std::vector<sim::StampedPosition> gt;
        for (const auto& f : ds.frames) gt.push_back({f.timestamp, f.gt.translation()});
        m = sim::evaluate_dgps(est, gt, ev_window);
      } else {
        throw Error(ErrorCode::kConfig, "unknown eval mode " + ev_mode);
      }
      const std::string text = metrics_json(m).dump(1) + "\n";
      if (ev_out.empty()) std::cout << text;
      else io::write_text(ev_out, text);
    } else if (*abl) {
      const auto cfg = session_config(abl_cfg, "", abl_seed);
      const auto vocab = load_vocab(abl_vocab);
      const auto ds = sim::read_dataset(abl_ds);
      std::vector<sim::Metrics> cols;
      for (const char* arm : kArms)
        cols.push_back(pipeline::evaluate_session(ds, run_arm(ds, cfg, pipeline::matching_from_string(arm), vocab)));
      std::string csv = "metric";
      for (const char* arm : kArms) csv += std::string(",") + arm;
      csv += "\n";
      const std::pair<const char*, double sim::Metrics::*> rows[] = {
          {"rmse_pos", &sim::Metrics::rmse_pos}, {"rmse_z", &sim::Metrics::rmse_z},
          {"rmse_angle", &sim::Metrics::rmse_angle}};
      for (const auto& [name, field] : rows) {
        csv += name;
        for (const auto& m : cols) csv += "," + fmt(m.*field);
        csv += "\n";
      }
      csv += "n_matches";
      for (const auto& m : cols) csv += "," + std::to_string(m.n_matches);
      csv += "\n";
      io::write_text(abl_out, csv);
    } else if (*plot) {
      const auto cfg = session_config(plot_cfg, "", plot_seed);
      const auto vocab = load_vocab(plot_vocab);
      const auto ds = sim::read_dataset(plot_ds);
      std::error_code ec;
      fs::create_directories(plot_out, ec);
      if (ec) throw Error(ErrorCode::kIo, "cannot create " + plot_out);
      std::vector<io::StampedPose> gt, odo;
      for (const auto& f : ds.frames) {
        gt.push_back({f.timestamp, f.gt});
        odo.push_back({f.timestamp, f.vio.pose});
      }
      write_positions_csv(fs::path(plot_out) / "ground_truth.csv", gt);
      write_positions_csv(fs::path(plot_out) / "odometry.csv", odo);
      for (const char* arm : kArms) {
        const auto res = run_arm(ds, cfg, pipeline::matching_from_string(arm), vocab);
        std::string name = arm;
        for (char& c : name)
          if (c == '+') c = '_';
        write_positions_csv(fs::path(plot_out) / ("arm_" + name + ".csv"), res.trajectory);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error (malformed input): " << e.what() << "\n";
    return kIoError;
  }
  return kOk;
}
