#include "herdtrack/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "herdtrack/errors.hpp"
#include "herdtrack/evaluation.hpp"
#include "herdtrack/scenario.hpp"

namespace herdtrack::cli {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
  if (!f) throw Error("write failed for " + path.string());
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

std::string tiles_json(const TileGrid& g) {
  nlohmann::ordered_json j;
  j["frame"] = {g.frame_w, g.frame_h};
  j["cols"] = g.cols;
  j["rows"] = g.rows;
  j["overlap"] = g.overlap;
  auto& tiles = j["tiles"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < g.tiles.size(); ++i) {
    const auto& r = g.tiles[i].rect;
    tiles.push_back({{"index", i}, {"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}});
  }
  return j.dump(2);
}

}  // namespace

RunReport make_report(const sim::ScenarioConfig& cfg, const sim::SimulationOutput& out) {
  RunReport r;
  r.scenario = cfg.name;
  r.seed = cfg.seed;
  r.frames = out.steps;
  r.camera_frames = out.camera_frames;
  r.detector_invocations = out.stats.detector_invocations;
  r.tracks_created = out.stats.tracks_created;
  r.tracks_confirmed = out.stats.tracks_confirmed;
  r.tracks_deleted = out.stats.tracks_deleted;
  r.trajectory_match = out.trajectory_match;
  const EvalMetrics m = evaluate_frames(out.frames, out.truth);
  r.mean_track_iou = m.mean_iou;
  r.iou_fraction = m.iou_fraction;
  r.id_switches = m.id_switches;
  r.throughput_fps = out.tracker_seconds > 0.0
                         ? static_cast<double>(out.camera_frames) / out.tracker_seconds
                         : 0.0;
  return r;
}

std::string report_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["frames"] = r.frames;
  j["camera_frames"] = r.camera_frames;
  j["detector_invocations"] = r.detector_invocations;
  j["tracks_created"] = r.tracks_created;
  j["tracks_confirmed"] = r.tracks_confirmed;
  j["tracks_deleted"] = r.tracks_deleted;
  j["trajectory_match"] = r.trajectory_match;
  j["mean_track_iou"] = r.mean_track_iou;
  j["iou_fraction"] = r.iou_fraction;
  j["id_switches"] = r.id_switches;
  j["throughput_fps"] = r.throughput_fps;
  return j.dump(2);
}

RunReport run_scenario(const fs::path& config, std::optional<std::uint64_t> seed,
                       const fs::path& out_dir, std::optional<std::int64_t> frames) {
  sim::ScenarioConfig cfg = sim::load_scenario(config);
  if (seed) cfg.seed = *seed;
  const sim::SimulationOutput out = sim::run_simulation(cfg, frames);

  fs::create_directories(out_dir);
  write_file(out_dir / "trajectory.csv", sim::trajectory_csv(out.trajectory));
  write_file(out_dir / "tracks.jsonl", join_lines(out.track_lines));
  write_file(out_dir / "commands.jsonl", join_lines(out.command_lines));
  write_file(out_dir / "truth.jsonl", join_lines(out.truth_lines));
  const RunReport report = make_report(cfg, out);
  write_file(out_dir / "report.json", report_json(report) + "\n");
  return report;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"herdsim: tracking-by-detection and herding simulator"};
  app.require_subcommand(1);

  std::string config;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::int64_t frames = 0;
  auto* run = app.add_subcommand("run", "Run a scenario in closed loop and export its outputs");
  run->add_option("--config", config, "Scenario file (JSON)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_dir, "Output directory")->required();
  auto* frames_opt = run->add_option("--frames", frames, "Stop after this many simulation steps")
                         ->check(CLI::PositiveNumber);

  std::string tracks_path;
  std::string truth_path;
  auto* eval = app.add_subcommand("evaluate", "Score a track stream against ground truth");
  eval->add_option("--tracks", tracks_path, "Track JSONL")->required();
  eval->add_option("--truth", truth_path, "Ground-truth JSONL")->required();

  int width = 1280;
  int height = 720;
  int cols = 3;
  int rows = 2;
  double overlap = 0.25;
  std::string tiles_config;
  auto* tiles = app.add_subcommand("export-tiles", "Print the detector tile layout");
  tiles->add_option("--width", width);
  tiles->add_option("--height", height);
  tiles->add_option("--cols", cols);
  tiles->add_option("--rows", rows);
  tiles->add_option("--overlap", overlap);
  tiles->add_option("--config", tiles_config, "Take the layout from a scenario file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*run) {
      const auto report = run_scenario(
          config, seed_opt->count() ? std::optional<std::uint64_t>(seed) : std::nullopt, out_dir,
          frames_opt->count() ? std::optional<std::int64_t>(frames) : std::nullopt);
      out << report_json(report) << '\n';
    } else if (*eval) {
      out << metrics_json(evaluate_files(tracks_path, truth_path)) << '\n';
    } else if (*tiles) {
      if (!tiles_config.empty()) {
        const auto cfg = sim::load_scenario(tiles_config);
        width = cfg.camera.width;
        height = cfg.camera.height;
        cols = cfg.pipeline.tile_cols;
        rows = cfg.pipeline.tile_rows;
        overlap = cfg.pipeline.tile_overlap;
      }
      out << tiles_json(make_tiles(width, height, cols, rows, overlap)) << '\n';
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidGrid& e) {
    err << "invalid tile grid: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace herdtrack::cli
