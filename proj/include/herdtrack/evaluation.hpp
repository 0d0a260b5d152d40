#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "herdtrack/errors.hpp"
#include "herdtrack/pipeline.hpp"

namespace herdtrack {

class FrameMisalignment : public Error {
public:
  using Error::Error;
};

struct EvalMetrics {
  std::int64_t samples{0};  // (frame, ground-truth object) pairs
  double iou_fraction{0.0};  // share of samples with IOU >= 0.5
  double mean_iou{0.0};
  std::int64_t id_switches{0};
  std::vector<double> per_sample_iou;
};

/// Scores confirmed tracks against ground-truth objects. Every tracked frame
/// must appear in the truth; truth frames absent from the tracks count as
/// frames with no tracks. Throws FrameMisalignment otherwise.
EvalMetrics evaluate_frames(std::span<const FrameResult> tracks,
                            std::span<const FrameResult> truth);

/// Reads track-stream JSONL files (blank lines ignored).
std::vector<FrameResult> read_frames(const std::filesystem::path& path);

EvalMetrics evaluate_files(const std::filesystem::path& tracks,
                           const std::filesystem::path& truth);

std::string metrics_json(const EvalMetrics& m);

}  // namespace herdtrack
