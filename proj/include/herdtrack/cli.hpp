#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "herdtrack/simulator.hpp"

namespace herdtrack::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct RunReport {
  std::string scenario;
  std::uint64_t seed{0};
  std::int64_t frames{0};
  std::int64_t camera_frames{0};
  std::int64_t detector_invocations{0};
  std::int64_t tracks_created{0};
  std::int64_t tracks_confirmed{0};
  std::int64_t tracks_deleted{0};
  double trajectory_match{0.0};
  double mean_track_iou{0.0};
  double iou_fraction{0.0};
  std::int64_t id_switches{0};
  double throughput_fps{0.0};
};

RunReport make_report(const sim::ScenarioConfig& cfg, const sim::SimulationOutput& out);
std::string report_json(const RunReport& r);

/// Runs a scenario and writes trajectory.csv, tracks.jsonl, commands.jsonl,
/// truth.jsonl and report.json into `out_dir`.
RunReport run_scenario(const std::filesystem::path& config, std::optional<std::uint64_t> seed,
                       const std::filesystem::path& out_dir,
                       std::optional<std::int64_t> frames = std::nullopt);

/// Entry point shared by the executable and the tests.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace herdtrack::cli
