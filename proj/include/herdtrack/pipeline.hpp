#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "herdtrack/association.hpp"
#include "herdtrack/flow.hpp"
#include "herdtrack/kalman.hpp"
#include "herdtrack/scheduler.hpp"

namespace herdtrack {

enum class TrackStatus { Tentative, Confirmed, Deleted };

const char* to_string(TrackStatus s);

struct Track {
  std::int64_t id{0};
  KalmanState state;
  int class_id{0};
  int hits{0};
  int misses{0};
  TrackStatus status{TrackStatus::Tentative};
};

struct PipelineConfig {
  int detect_every_n{3};
  // Frame index of the first detector slot; slots are offset, offset + N, ...
  int detect_offset{1};
  int confirm_hits{3};
  int max_misses{30};

  int frame_w{1280};
  int frame_h{720};
  int tile_cols{3};
  int tile_rows{2};
  double tile_overlap{0.25};
  // Detections this close to an interior tile edge are dropped; the
  // overlapping neighbour sees the whole object. Negative keeps them all.
  double tile_edge_margin{6.0};

  // Background sampling grid and the dilation applied to track boxes when
  // masking them out of it.
  int background_cols{16};
  int background_rows{9};
  double background_dilation{0.1};

  // Measurement variance for flow-propagated boxes. Flow picks up background
  // points near the box edges, so it is trusted less than a detection.
  double flow_r_meas{16.0};

  KalmanConfig kalman;
  AssociationConfig association;
  SchedulerConfig scheduler;
  SampleSpec sampling;

  void validate() const;
};

struct TrackReport {
  std::int64_t id{0};
  BBox box;
  int class_id{0};
  TrackStatus status{TrackStatus::Tentative};
};

struct FrameResult {
  std::int64_t frame_index{0};
  std::vector<TrackReport> tracks;
  bool detector_ran{false};
  std::optional<int> tile_processed;
};

/// Counter bookkeeping for one frame. `detector_ran` means a detector slot
/// that could have observed this track; other frames leave counters alone.
Track lifecycle_update(const Track& track, bool matched_this_slot, bool detector_ran,
                       const PipelineConfig& cfg);

/// True when `frame_index` is a detector slot under the configured schedule.
bool is_detector_slot(std::int64_t frame_index, const PipelineConfig& cfg);

struct PipelineStats {
  std::int64_t detector_invocations{0};
  std::int64_t detector_failures{0};
  std::int64_t tracks_created{0};
  std::int64_t tracks_confirmed{0};
  std::int64_t tracks_deleted{0};
  std::int64_t camera_fallbacks{0};
  std::int64_t flow_failures{0};
};

/// Tracking-by-detection loop for a single video stream. Every frame runs
/// camera compensation, flow propagation and the Kalman filter; detector
/// slots additionally run one tile through the detector and associate.
class TrackerPipeline {
public:
  /// The matcher and detector must outlive the pipeline.
  TrackerPipeline(PipelineConfig cfg, FeatureMatcher& matcher, Detector& detector);

  /// Throws OutOfOrderFrame unless frame_index exceeds every earlier one.
  FrameResult step(const FrameHandle& prev, const FrameHandle& cur, std::int64_t frame_index);

  const std::vector<Track>& tracks() const { return tracks_; }
  const TileGrid& grid() const { return grid_; }
  const PipelineStats& stats() const { return stats_; }
  const PipelineConfig& config() const { return cfg_; }

private:
  struct FlowOutcome {
    std::optional<BBox> measurement;
  };

  CameraMotion compensate_camera(const FrameHandle& prev, const FrameHandle& cur);
  std::vector<FlowOutcome> propagate_all(const FrameHandle& prev, const FrameHandle& cur,
                                         const std::vector<BBox>& prev_boxes);
  void run_detector_slot(const FrameHandle& cur, std::vector<FlowOutcome>& flow,
                         FrameResult& result);
  void apply_measurement(Track& track, const BBox& z, const KalmanConfig& kc);
  void apply_flow(Track& track, const BBox& z);
  void register_track(const Detection& det);
  FrameResult emit(std::int64_t frame_index, bool detector_ran, std::optional<int> tile);

  PipelineConfig cfg_;
  FeatureMatcher& matcher_;
  Detector& detector_;
  TileGrid grid_;
  std::vector<Track> tracks_;
  std::int64_t next_id_{1};
  std::optional<std::int64_t> last_frame_;
  PipelineStats stats_;
};

}  // namespace herdtrack
