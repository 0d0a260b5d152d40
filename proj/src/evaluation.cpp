#include "herdtrack/evaluation.hpp"

#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "herdtrack/track_stream.hpp"

namespace herdtrack {

EvalMetrics evaluate_frames(std::span<const FrameResult> tracks,
                            std::span<const FrameResult> truth) {
  std::map<std::int64_t, const FrameResult*> by_frame;
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (const auto& f : tracks) {
    if (f.frame_index <= last) {
      throw FrameMisalignment("track frames must be strictly increasing");
    }
    last = f.frame_index;
    by_frame[f.frame_index] = &f;
  }
  std::size_t consumed = 0;

  EvalMetrics m;
  std::map<std::int64_t, std::int64_t> last_match;  // truth id -> track id
  std::int64_t hits = 0;
  double iou_sum = 0.0;
  for (const auto& gt_frame : truth) {
    const auto it = by_frame.find(gt_frame.frame_index);
    const FrameResult* trk = it == by_frame.end() ? nullptr : it->second;
    if (trk) ++consumed;
    for (const auto& obj : gt_frame.tracks) {
      double best = 0.0;
      std::int64_t best_id = -1;
      if (trk) {
        for (const auto& t : trk->tracks) {
          if (t.status != TrackStatus::Confirmed) continue;
          const double v = iou(obj.box, t.box);
          if (v > best) {
            best = v;
            best_id = t.id;
          }
        }
      }
      m.per_sample_iou.push_back(best);
      ++m.samples;
      iou_sum += best;
      if (best >= 0.5) {
        ++hits;
        const auto prev = last_match.find(obj.id);
        if (prev != last_match.end() && prev->second != best_id) ++m.id_switches;
        last_match[obj.id] = best_id;
      }
    }
  }
  if (consumed != by_frame.size()) {
    throw FrameMisalignment("track file contains frames missing from the ground truth");
  }
  if (m.samples > 0) {
    m.iou_fraction = static_cast<double>(hits) / static_cast<double>(m.samples);
    m.mean_iou = iou_sum / static_cast<double>(m.samples);
  }
  return m;
}

std::vector<FrameResult> read_frames(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  std::vector<FrameResult> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(decode_frame(line));
  }
  return out;
}

EvalMetrics evaluate_files(const std::filesystem::path& tracks,
                           const std::filesystem::path& truth) {
  const auto t = read_frames(tracks);
  const auto g = read_frames(truth);
  return evaluate_frames(t, g);
}

std::string metrics_json(const EvalMetrics& m) {
  nlohmann::ordered_json j;
  j["samples"] = m.samples;
  j["iou_fraction"] = m.iou_fraction;
  j["mean_iou"] = m.mean_iou;
  j["id_switches"] = m.id_switches;
  return j.dump(2);
}

}  // namespace herdtrack
