#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "herdtrack/camera.hpp"
#include "herdtrack/control.hpp"
#include "herdtrack/flow.hpp"
#include "herdtrack/pipeline.hpp"
#include "herdtrack/random.hpp"
#include "herdtrack/scheduler.hpp"

namespace herdtrack::sim {

enum class MissionPhase { Idle, Navigate, Track, Herd, Return };

const char* to_string(MissionPhase p);

struct WorldState {
  double t{0.0};
  Vec3 elephant_pos{Vec3::Zero()};
  Vec3 elephant_vel{Vec3::Zero()};
  double elephant_heading{0.0};
  Vec3 uav_pos{Vec3::Zero()};
  Vec3 uav_vel{Vec3::Zero()};
  double uav_yaw{0.0};
  Vec3 base_pos{Vec3::Zero()};
  bool tag_awake{false};
  MissionPhase phase{MissionPhase::Idle};
};

struct NoiseConfig {
  double det_miss_prob{0.0};
  double det_fp_rate{0.0};  // expected false positives per processed tile
  double det_jitter_sigma{0.0};
  double flow_noise_sigma{0.0};
  double flow_drop_prob{0.0};
  std::uint64_t seed{0};

  /// True when every noise source is switched off.
  bool noiseless() const;
  void validate() const;
};

struct ElephantSpec {
  Vec3 start{110.0, 0.0, 0.0};
  Vec3 velocity{-1.0, 0.0, 0.0};  // scripted approach velocity, m/s
  double flee_speed{1.5};
  Vec3 size{4.0, 2.0, 3.0};  // length, width, height in metres
};

struct UavSpec {
  double cruise_speed{8.0};
  double cruise_altitude{6.0};
  double climb_rate{2.0};
  double max_speed{6.0};
  double max_yaw_rate_deg{45.0};
  // Commanded pitch/roll rate (deg/s) to body velocity (m/s).
  double velocity_per_deg{0.2};
};

struct ScenarioConfig {
  std::string name{"scenario"};
  std::uint64_t seed{42};
  double fps{30.0};
  double duration_s{120.0};

  Vec3 base_pos{Vec3::Zero()};
  double geofence_radius{100.0};
  double waypoint_tolerance{2.0};
  double camera_handoff_distance{36.0};
  double herd_exit_margin{50.0};
  double herd_radius{40.0};
  // Desired planar distance from the UAV to the elephant while herding.
  double standoff{30.0};
  double match_margin{1.0};

  ElephantSpec elephant;
  UavSpec uav;
  CameraModel camera;
  // Derive the camera tilt from altitude and standoff.
  bool auto_tilt{true};
  // Reference box area for the servo; <= 0 derives it from the standoff.
  double ref_area{0.0};

  NoiseConfig noise;
  PipelineConfig pipeline;
  PIDGains gains;

  void validate() const;
};

/// Quantities derived from the scenario's standoff geometry.
struct NominalGeometry {
  double tilt{0.0};
  double ref_area{0.0};
  // Planar distance from the UAV to the projected foot point of the
  // elephant's image box when it sits at the standoff.
  double footpoint_offset{0.0};
};

NominalGeometry derive_nominal(const ScenarioConfig& cfg);

/// Scenario with derived tilt and reference area filled in.
ScenarioConfig resolve(const ScenarioConfig& cfg);

/// Awake iff the planar distance to the base is at most `radius`.
bool geofence_check(const Vec3& elephant_pos, const Vec3& base_pos, double radius);

WorldState initial_state(const ScenarioConfig& cfg);

CameraPose camera_pose(const WorldState& state, const CameraModel& cam);

/// Advances the world by `dt`. `confirmed_track` reports whether the tracker
/// currently holds a confirmed track (drives Track -> Herd).
WorldState step_world(const WorldState& state, const ControlCommand& cmd,
                      const ScenarioConfig& cfg, double dt, bool confirmed_track);

struct GroundTruthView {
  std::optional<BBox> box;
  bool visible{false};
};

/// Image-plane bounding box of the elephant's box-shaped volume.
GroundTruthView render_ground_truth(const WorldState& state, const CameraModel& cam,
                                    const Vec3& size = Vec3{4.0, 2.0, 3.0});

struct GroundTruthObject {
  BBox box;  // frame coordinates
  int class_id{0};
};

/// Synthetic detector output for one tile, in frame coordinates.
std::vector<Detection> synth_detect(const TileRect& tile, std::span<const GroundTruthObject> gt,
                                    const NoiseConfig& noise, Rng& rng);

using TrueMotion = std::variant<AffineTransform, Homography>;

/// Synthetic point tracks: dst = motion(src) + noise; dropped points come back
/// invalid. Draws are keyed by (seed, frame, point) so results do not depend on
/// call order.
std::vector<MatchResult> synth_matches(std::span<const Vec2> query, const TrueMotion& motion,
                                       const NoiseConfig& noise, std::int64_t frame);

/// Fraction of samples whose planar distance is within `margin`.
/// Throws LengthMismatch when the trajectories differ in length.
double trajectory_match(std::span<const Vec3> uav_traj, std::span<const Vec3> gt_traj,
                        double margin);

/// Frame-to-frame motion the simulator knows to be true.
struct FrameMotion {
  // Background pixels move with the ground plane between these poses; pixels
  // whose ray misses the ground come back invalid.
  CameraPose from;
  CameraPose to;
  bool has_camera{false};
  struct Object {
    BBox prev_box;
    AffineTransform motion;
  };
  std::vector<Object> objects;
};

/// FeatureMatcher backed by simulator ground truth.
class SimFeatureMatcher : public FeatureMatcher {
public:
  SimFeatureMatcher(CameraModel cam, NoiseConfig noise) : cam_(cam), noise_(noise) {}

  void set_motion(std::int64_t frame, FrameMotion motion);
  std::vector<MatchResult> match(const FrameHandle& prev, const FrameHandle& cur,
                                 std::span<const Vec2> query) override;

private:
  CameraModel cam_;
  NoiseConfig noise_;
  std::unordered_map<std::int64_t, FrameMotion> motions_;
};

/// Detector backed by simulator ground truth.
class SimDetector : public Detector {
public:
  explicit SimDetector(NoiseConfig noise) : noise_(noise) {}

  void set_ground_truth(std::int64_t frame, std::vector<GroundTruthObject> objects);
  std::vector<Detection> detect(const FrameHandle& frame, const TileRect& tile) override;
  double nominal_latency_ms() const override { return 40.0; }

private:
  NoiseConfig noise_;
  std::unordered_map<std::int64_t, std::vector<GroundTruthObject>> truth_;
};

struct TrajectoryRow {
  double t{0.0};
  double ex{0.0};
  double ey{0.0};
  double ux{0.0};
  double uy{0.0};
  MissionPhase phase{MissionPhase::Idle};
};

struct SimulationOutput {
  std::vector<TrajectoryRow> trajectory;
  std::vector<std::string> track_lines;
  std::vector<std::string> command_lines;
  std::vector<std::string> truth_lines;
  std::vector<FrameResult> frames;
  std::vector<FrameResult> truth;

  // Samples for the trajectory comparison, Track and Herd phases only.
  std::vector<Vec3> match_uav;
  std::vector<Vec3> match_gt;
  double trajectory_match{0.0};

  std::int64_t steps{0};
  std::int64_t camera_frames{0};
  std::vector<MissionPhase> phase_history;  // one entry per distinct phase run
  std::vector<std::string> state_trace;     // one line per step, full precision
  PipelineStats stats;
  double tracker_seconds{0.0};
  NominalGeometry nominal;
};

/// Runs the closed loop until the mission returns to Idle after herding, the
/// scenario duration elapses, or `max_steps` is reached.
SimulationOutput run_simulation(const ScenarioConfig& cfg,
                                std::optional<std::int64_t> max_steps = std::nullopt);

/// CSV with header t,ex,ey,ux,uy,phase.
std::string trajectory_csv(std::span<const TrajectoryRow> rows);

}  // namespace herdtrack::sim
