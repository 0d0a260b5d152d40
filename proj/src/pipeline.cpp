#include "herdtrack/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <iostream>
#include <string>

#include "herdtrack/errors.hpp"

namespace herdtrack {

namespace {

BBox frame_box(const PipelineConfig& cfg) {
  return {0.0, 0.0, double(cfg.frame_w), double(cfg.frame_h)};
}

}  // namespace

const char* to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::Tentative: return "tentative";
    case TrackStatus::Confirmed: return "confirmed";
    case TrackStatus::Deleted: return "deleted";
  }
  return "unknown";
}

void PipelineConfig::validate() const {
  if (detect_every_n < 1) throw ConfigError("detect_every_n", "must be at least 1");
  if (detect_offset < 0) throw ConfigError("detect_offset", "must be non-negative");
  if (confirm_hits < 1) throw ConfigError("confirm_hits", "must be at least 1");
  if (max_misses < 1) throw ConfigError("max_misses", "must be at least 1");
  if (frame_w < 1 || frame_h < 1) throw ConfigError("frame_w", "frame must be at least 1x1");
  if (background_cols < 0 || background_rows < 0) {
    throw ConfigError("background_cols", "must be non-negative");
  }
  if (!(background_dilation >= 0.0)) {
    throw ConfigError("background_dilation", "must be non-negative");
  }
  if (!(flow_r_meas > 0.0)) throw ConfigError("flow_r_meas", "must be positive");
  kalman.validate();
  association.validate();
  scheduler.validate();
  sampling.validate();
}

bool is_detector_slot(std::int64_t frame_index, const PipelineConfig& cfg) {
  return frame_index >= cfg.detect_offset &&
         (frame_index - cfg.detect_offset) % cfg.detect_every_n == 0;
}

Track lifecycle_update(const Track& track, bool matched_this_slot, bool detector_ran,
                       const PipelineConfig& cfg) {
  Track out = track;
  if (!detector_ran || out.status == TrackStatus::Deleted) return out;
  if (matched_this_slot) {
    ++out.hits;
    out.misses = 0;
  } else {
    ++out.misses;
    out.hits = 0;
  }
  if (out.status == TrackStatus::Tentative && out.hits >= cfg.confirm_hits) {
    out.status = TrackStatus::Confirmed;
  }
  if (out.misses >= cfg.max_misses) out.status = TrackStatus::Deleted;
  return out;
}

TrackerPipeline::TrackerPipeline(PipelineConfig cfg, FeatureMatcher& matcher, Detector& detector)
    : cfg_(std::move(cfg)), matcher_(matcher), detector_(detector) {
  cfg_.validate();
  grid_ = make_tiles(cfg_.frame_w, cfg_.frame_h, cfg_.tile_cols, cfg_.tile_rows,
                     cfg_.tile_overlap);
}

CameraMotion TrackerPipeline::compensate_camera(const FrameHandle& prev, const FrameHandle& cur) {
  std::vector<BBox> masks;
  masks.reserve(tracks_.size());
  for (const auto& t : tracks_) masks.push_back(t.state.box().dilated(cfg_.background_dilation));

  const auto pts = sample_background(cfg_.frame_w, cfg_.frame_h, cfg_.background_cols,
                                     cfg_.background_rows, masks);
  CameraMotion cam{Homography::identity(), true};
  if (!pts.empty()) {
    const auto results = matcher_.match(prev, cur, pts);
    cam = estimate_camera_motion(valid_matches(results));
  }
  if (cam.insufficient_data) ++stats_.camera_fallbacks;
  return cam;
}

std::vector<TrackerPipeline::FlowOutcome> TrackerPipeline::propagate_all(
    const FrameHandle& prev, const FrameHandle& cur, const std::vector<BBox>& prev_boxes) {
  std::vector<FlowOutcome> out(tracks_.size());
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    const BBox& box = prev_boxes[i];
    // Points can only be tracked on the visible part of the box.
    const BBox visible = intersection(box, frame_box(cfg_));
    if (!(visible.area() > 0.0)) continue;
    const auto pts = sample_points(visible, cfg_.sampling);
    const auto matches = valid_matches(matcher_.match(prev, cur, pts));
    if (matches.size() < 3) {
      ++stats_.flow_failures;
      continue;
    }
    try {
      out[i].measurement = propagate_track(box, matches);
    } catch (const DegenerateConfiguration&) {
      ++stats_.flow_failures;
    }
  }
  return out;
}

void TrackerPipeline::apply_measurement(Track& track, const BBox& z, const KalmanConfig& kc) {
  try {
    track.state = update(track.state, z, kc);
  } catch (const SingularInnovation&) {
    track.status = TrackStatus::Deleted;
  }
}

void TrackerPipeline::apply_flow(Track& track, const BBox& z) {
  KalmanConfig kc = cfg_.kalman;
  kc.r_meas = cfg_.flow_r_meas;
  apply_measurement(track, z, kc);
}

void TrackerPipeline::register_track(const Detection& det) {
  Track t;
  t.id = next_id_++;
  t.state = initiate(det.box, cfg_.kalman);
  t.class_id = det.class_id;
  t.hits = 1;
  t.status = t.hits >= cfg_.confirm_hits ? TrackStatus::Confirmed : TrackStatus::Tentative;
  if (t.status == TrackStatus::Confirmed) ++stats_.tracks_confirmed;
  ++stats_.tracks_created;
  tracks_.push_back(std::move(t));
}

void TrackerPipeline::run_detector_slot(const FrameHandle& cur, std::vector<FlowOutcome>& flow,
                                        FrameResult& result) {
  const int tile_index = select_tile(grid_, cfg_.scheduler);
  const TileRect rect = grid_.tiles[static_cast<std::size_t>(tile_index)].rect;
  result.tile_processed = tile_index;
  ++stats_.detector_invocations;

  std::vector<Detection> raw;
  try {
    raw = detector_.detect(cur, rect);
  } catch (const std::exception& e) {
    // Tracking-only for this slot; the tile keeps its age so it is retried.
    ++stats_.detector_failures;
    std::cerr << "detector failed on frame " << cur.index << " tile " << tile_index << ": "
              << e.what() << '\n';
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      if (flow[i].measurement) apply_flow(tracks_[i], *flow[i].measurement);
    }
    return;
  }
  result.detector_ran = true;

  const std::pair<TileRect, std::vector<Detection>> per_tile[] = {{rect, std::move(raw)}};
  auto dets = merge_detections(per_tile, cfg_.scheduler);
  if (cfg_.tile_edge_margin >= 0.0) {
    std::erase_if(dets, [&](const Detection& d) {
      return cut_by_tile(d.box, rect, cfg_.frame_w, cfg_.frame_h, cfg_.tile_edge_margin);
    });
  }
  record_visit(grid_, tile_index, static_cast<int>(dets.size()));

  std::vector<TrackCandidate> candidates;
  candidates.reserve(tracks_.size());
  for (const auto& t : tracks_) candidates.push_back({project(t.state, cfg_.kalman), t.state.box()});
  std::vector<BBox> det_boxes;
  det_boxes.reserve(dets.size());
  for (const auto& d : dets) det_boxes.push_back(d.box);

  const auto assoc = associate(candidates, det_boxes, cfg_.association);

  std::vector<char> matched(tracks_.size(), 0);
  for (const auto& [ti, di] : assoc.matches) {
    auto& t = tracks_[static_cast<std::size_t>(ti)];
    matched[static_cast<std::size_t>(ti)] = 1;
    t.class_id = dets[static_cast<std::size_t>(di)].class_id;
    apply_measurement(t, dets[static_cast<std::size_t>(di)].box, cfg_.kalman);
  }

  const BBox tile_box = rect.as_box();
  for (std::size_t i = 0; i < tracks_.size(); ++i) {
    auto& t = tracks_[i];
    if (!matched[i] && flow[i].measurement) apply_flow(t, *flow[i].measurement);
    // A track only accrues a miss when the processed tile held the centre of
    // its visible part.
    const BBox visible = intersection(t.state.box(), frame_box(cfg_));
    const bool observable =
        matched[i] || (visible.area() > 0.0 && tile_box.contains(visible.center()));
    const TrackStatus before = t.status;
    t = lifecycle_update(t, matched[i] != 0, observable, cfg_);
    if (before == TrackStatus::Tentative && t.status == TrackStatus::Confirmed) {
      ++stats_.tracks_confirmed;
    }
  }

  for (int di : assoc.unmatched_detections) register_track(dets[static_cast<std::size_t>(di)]);
}

FrameResult TrackerPipeline::emit(std::int64_t frame_index, bool detector_ran,
                                  std::optional<int> tile) {
  FrameResult r;
  r.frame_index = frame_index;
  r.detector_ran = detector_ran;
  r.tile_processed = tile;
  for (const auto& t : tracks_) {
    if (t.status == TrackStatus::Deleted) continue;
    r.tracks.push_back({t.id, t.state.box(), t.class_id, t.status});
  }
  return r;
}

FrameResult TrackerPipeline::step(const FrameHandle& prev, const FrameHandle& cur,
                                  std::int64_t frame_index) {
  if (last_frame_ && frame_index <= *last_frame_) {
    throw OutOfOrderFrame("frame " + std::to_string(frame_index) + " after frame " +
                          std::to_string(*last_frame_));
  }
  last_frame_ = frame_index;

  // Camera motion is estimated once, before any per-track work.
  const CameraMotion cam = compensate_camera(prev, cur);

  std::vector<BBox> prev_boxes;
  prev_boxes.reserve(tracks_.size());
  for (const auto& t : tracks_) prev_boxes.push_back(t.state.box());
  auto flow = propagate_all(prev, cur, prev_boxes);

  for (auto& t : tracks_) {
    try {
      t.state = apply_camera_motion(t.state, cam.h);
    } catch (const ProjectiveDegeneracy&) {
      // Leave the state in previous-frame coordinates.
    }
    t.state = predict(t.state, cfg_.kalman);
  }

  FrameResult result;
  if (is_detector_slot(frame_index, cfg_)) {
    run_detector_slot(cur, flow, result);
  } else {
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      if (flow[i].measurement) apply_flow(tracks_[i], *flow[i].measurement);
    }
  }

  // Tracks that left the frame entirely can never be re-observed.
  const BBox frame = frame_box(cfg_);
  for (auto& t : tracks_) {
    if (intersection(t.state.box(), frame).area() <= 0.0) t.status = TrackStatus::Deleted;
  }
  const auto deleted = std::count_if(tracks_.begin(), tracks_.end(),
                                     [](const Track& t) { return t.status == TrackStatus::Deleted; });
  stats_.tracks_deleted += deleted;
  std::erase_if(tracks_, [](const Track& t) { return t.status == TrackStatus::Deleted; });

  return emit(frame_index, result.detector_ran, result.tile_processed);
}

}  // namespace herdtrack
