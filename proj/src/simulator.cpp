#include "herdtrack/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "herdtrack/errors.hpp"
#include "herdtrack/track_stream.hpp"

namespace herdtrack::sim {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kNearPlane = 0.1;

double planar_distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x() - b.x(), a.y() - b.y());
}

Vec3 planar_unit(const Vec3& v) {
  const double n = std::hypot(v.x(), v.y());
  if (n <= 0.0) return Vec3::Zero();
  return {v.x() / n, v.y() / n, 0.0};
}

double wrap_angle(double a) {
  return std::remainder(a, 2.0 * std::numbers::pi);
}

double approach(double value, double target, double max_step) {
  return value + std::clamp(target - value, -max_step, max_step);
}

// Planar waypoint leg: turn toward the target and fly at cruise speed
// without overshooting it.
void fly_toward(WorldState& s, const Vec3& target, const UavSpec& uav, double dt) {
  const Vec3 delta{target.x() - s.uav_pos.x(), target.y() - s.uav_pos.y(), 0.0};
  const double dist = delta.norm();
  if (dist > 1e-9) {
    const double desired = std::atan2(delta.y(), delta.x());
    const double turn = wrap_angle(desired - s.uav_yaw);
    const double max_turn = uav.max_yaw_rate_deg * kDegToRad * dt;
    s.uav_yaw = wrap_angle(s.uav_yaw + std::clamp(turn, -max_turn, max_turn));
  }
  const double speed = std::min(uav.cruise_speed, dist / dt);
  const Vec3 v = planar_unit(delta) * speed;
  s.uav_vel.x() = v.x();
  s.uav_vel.y() = v.y();
}

// Object image motion between two frames as the per-axis scale + shift that
// carries the previous box onto the current one.
std::optional<AffineTransform> box_motion(const BBox& from, const BBox& to) {
  if (!(from.width() > 0.0 && from.height() > 0.0)) return std::nullopt;
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  a(0, 0) = to.width() / from.width();
  a(1, 1) = to.height() / from.height();
  return AffineTransform::from(a, to.top_left() - a * from.top_left());
}

MatchResult perturb(const Vec2& src, const std::optional<Vec2>& dst, const NoiseConfig& noise,
                    std::int64_t frame) {
  MatchResult r;
  r.match.src = src;
  if (!dst) return r;
  Rng rng = Rng::substream(noise.seed, {static_cast<std::uint64_t>(frame),
                                        static_cast<std::uint64_t>(NoisePurpose::FlowPoint),
                                        key_of(src.x()), key_of(src.y())});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (noise.flow_drop_prob > 0.0 && unit(rng) < noise.flow_drop_prob) return r;
  Vec2 d = *dst;
  if (noise.flow_noise_sigma > 0.0) {
    std::normal_distribution<double> n(0.0, noise.flow_noise_sigma);
    d.x() += n(rng);
    d.y() += n(rng);
  }
  r.match.dst = d;
  r.valid = d.allFinite();
  return r;
}

std::optional<Vec2> apply_motion(const TrueMotion& motion, const Vec2& p) {
  return std::visit(
      [&](const auto& m) -> std::optional<Vec2> {
        try {
          return m.apply(p);
        } catch (const ProjectiveDegeneracy&) {
          return std::nullopt;
        }
      },
      motion);
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  if (std::string_view(buf) == "-0.000") return "0.000";
  return buf;
}

}  // namespace

const char* to_string(MissionPhase p) {
  switch (p) {
    case MissionPhase::Idle: return "idle";
    case MissionPhase::Navigate: return "navigate";
    case MissionPhase::Track: return "track";
    case MissionPhase::Herd: return "herd";
    case MissionPhase::Return: return "return";
  }
  return "unknown";
}

bool NoiseConfig::noiseless() const {
  return det_miss_prob == 0.0 && det_fp_rate == 0.0 && det_jitter_sigma == 0.0 &&
         flow_noise_sigma == 0.0 && flow_drop_prob == 0.0;
}

void NoiseConfig::validate() const {
  auto prob = [](double p, const char* key) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(key, "must be a probability in [0, 1]");
  };
  prob(det_miss_prob, "noise.det_miss_prob");
  prob(flow_drop_prob, "noise.flow_drop_prob");
  if (!(det_fp_rate >= 0.0)) throw ConfigError("noise.det_fp_rate", "must be non-negative");
  if (!(det_jitter_sigma >= 0.0)) throw ConfigError("noise.det_jitter_sigma", "must be non-negative");
  if (!(flow_noise_sigma >= 0.0)) throw ConfigError("noise.flow_noise_sigma", "must be non-negative");
}

void ScenarioConfig::validate() const {
  if (!(fps > 0.0)) throw ConfigError("fps", "must be positive");
  if (!(duration_s > 0.0)) throw ConfigError("duration_s", "must be positive");
  if (!(geofence_radius > 0.0)) throw ConfigError("geofence_radius", "must be positive");
  if (!(waypoint_tolerance > 0.0)) throw ConfigError("waypoint_tolerance", "must be positive");
  if (!(camera_handoff_distance > 0.0)) {
    throw ConfigError("camera_handoff_distance", "must be positive");
  }
  if (!(herd_exit_margin > 0.0)) throw ConfigError("herd_exit_margin", "must be positive");
  if (!(herd_radius > 0.0)) throw ConfigError("herd_radius", "must be positive");
  if (!(standoff > 0.0)) throw ConfigError("standoff", "must be positive");
  if (!(match_margin > 0.0)) throw ConfigError("match_margin", "must be positive");
  if (!(elephant.size.minCoeff() > 0.0)) throw ConfigError("elephant.size", "must be positive");
  if (!(elephant.flee_speed >= 0.0)) throw ConfigError("elephant.flee_speed", "must be non-negative");
  if (!(uav.cruise_speed > 0.0)) throw ConfigError("uav.cruise_speed", "must be positive");
  if (!(uav.cruise_altitude > 0.0)) throw ConfigError("uav.cruise_altitude", "must be positive");
  if (!(uav.climb_rate > 0.0)) throw ConfigError("uav.climb_rate", "must be positive");
  if (!(uav.max_speed > 0.0)) throw ConfigError("uav.max_speed", "must be positive");
  if (!(uav.max_yaw_rate_deg > 0.0)) throw ConfigError("uav.max_yaw_rate_deg", "must be positive");
  if (!(uav.velocity_per_deg > 0.0)) throw ConfigError("uav.velocity_per_deg", "must be positive");
  camera.validate();
  noise.validate();
  try {
    pipeline.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("pipeline." + e.key(), "invalid value");
  }
  try {
    gains.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("control." + e.key(), "invalid value");
  }
}

bool geofence_check(const Vec3& elephant_pos, const Vec3& base_pos, double radius) {
  return planar_distance(elephant_pos, base_pos) <= radius;
}

CameraPose camera_pose(const WorldState& state, const CameraModel& cam) {
  return CameraPose{state.uav_pos, state.uav_yaw, cam.tilt};
}

GroundTruthView render_ground_truth(const WorldState& state, const CameraModel& cam,
                                    const Vec3& size) {
  const CameraPose pose = camera_pose(state, cam);
  const double c = std::cos(state.elephant_heading);
  const double s = std::sin(state.elephant_heading);
  const Vec3 forward{c, s, 0.0};
  const Vec3 lateral{-s, c, 0.0};
  const Vec3 center{state.elephant_pos.x(), state.elephant_pos.y(), 0.5 * size.z()};

  double u0 = std::numeric_limits<double>::infinity();
  double v0 = u0;
  double u1 = -u0;
  double v1 = -u0;
  for (int i = 0; i < 8; ++i) {
    const double sf = (i & 1) ? 0.5 : -0.5;
    const double sl = (i & 2) ? 0.5 : -0.5;
    const double sz = (i & 4) ? 0.5 : -0.5;
    const Vec3 corner = center + sf * size.x() * forward + sl * size.y() * lateral +
                        Vec3{0.0, 0.0, sz * size.z()};
    const Projection p = project_point(cam, pose, corner);
    if (p.depth <= kNearPlane) return {};
    u0 = std::min(u0, p.pixel.x());
    v0 = std::min(v0, p.pixel.y());
    u1 = std::max(u1, p.pixel.x());
    v1 = std::max(v1, p.pixel.y());
  }
  const BBox frame{0.0, 0.0, double(cam.width), double(cam.height)};
  const BBox clipped = intersection(BBox{u0, v0, u1, v1}, frame);
  if (!(clipped.area() > 0.0)) return {};
  return {clipped, true};
}

std::vector<Detection> synth_detect(const TileRect& tile, std::span<const GroundTruthObject> gt,
                                    const NoiseConfig& noise, Rng& rng) {
  const BBox tile_box = tile.as_box();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Detection> out;
  for (const auto& obj : gt) {
    const BBox visible = intersection(obj.box, tile_box);
    if (!(visible.area() > 0.0)) continue;
    if (noise.det_miss_prob > 0.0 && unit(rng) < noise.det_miss_prob) continue;
    BBox b = visible;
    if (noise.det_jitter_sigma > 0.0) {
      std::normal_distribution<double> n(0.0, noise.det_jitter_sigma);
      b.x_tl += n(rng);
      b.y_tl += n(rng);
      b.x_br += n(rng);
      b.y_br += n(rng);
      b = intersection(b.normalized(), tile_box);
      if (!(b.area() > 0.0)) continue;
    }
    // A noiseless sensor reports full confidence.
    const double conf = noise.noiseless() ? 1.0 : 0.5 + 0.5 * unit(rng);
    out.push_back({b, obj.class_id, conf});
  }
  if (noise.det_fp_rate > 0.0) {
    std::poisson_distribution<int> count(noise.det_fp_rate);
    const int k = count(rng);
    for (int i = 0; i < k; ++i) {
      const double w = std::min<double>(tile.w, 20.0 + 60.0 * unit(rng));
      const double h = std::min<double>(tile.h, 20.0 + 60.0 * unit(rng));
      const double x = tile.x + (tile.w - w) * unit(rng);
      const double y = tile.y + (tile.h - h) * unit(rng);
      out.push_back({BBox{x, y, x + w, y + h}, 0, 0.3 + 0.5 * unit(rng)});
    }
  }
  return out;
}

std::vector<MatchResult> synth_matches(std::span<const Vec2> query, const TrueMotion& motion,
                                       const NoiseConfig& noise, std::int64_t frame) {
  std::vector<MatchResult> out;
  out.reserve(query.size());
  for (const auto& p : query) out.push_back(perturb(p, apply_motion(motion, p), noise, frame));
  return out;
}

double trajectory_match(std::span<const Vec3> uav_traj, std::span<const Vec3> gt_traj,
                        double margin) {
  if (uav_traj.size() != gt_traj.size()) {
    throw LengthMismatch("trajectories differ in length");
  }
  if (uav_traj.empty()) return 0.0;
  std::size_t within = 0;
  for (std::size_t i = 0; i < uav_traj.size(); ++i) {
    if (planar_distance(uav_traj[i], gt_traj[i]) <= margin) ++within;
  }
  return static_cast<double>(within) / static_cast<double>(uav_traj.size());
}

void SimFeatureMatcher::set_motion(std::int64_t frame, FrameMotion motion) {
  motions_[frame] = std::move(motion);
}

std::vector<MatchResult> SimFeatureMatcher::match(const FrameHandle& prev, const FrameHandle& cur,
                                                  std::span<const Vec2> query) {
  const auto it = motions_.find(cur.index);
  if (prev.index == cur.index || it == motions_.end() || !it->second.has_camera) {
    return synth_matches(query, AffineTransform::identity(), noise_, cur.index);
  }
  const FrameMotion& fm = it->second;
  std::vector<MatchResult> out;
  out.reserve(query.size());
  for (const auto& p : query) {
    std::optional<Vec2> dst;
    const auto obj = std::find_if(fm.objects.begin(), fm.objects.end(),
                                  [&](const FrameMotion::Object& o) { return o.prev_box.contains(p); });
    if (obj != fm.objects.end()) {
      dst = obj->motion.apply(p);
    } else if (const auto g = ground_point(cam_, fm.from, p)) {
      const Projection proj = project_point(cam_, fm.to, *g);
      if (proj.depth > kNearPlane) dst = proj.pixel;
    }
    out.push_back(perturb(p, dst, noise_, cur.index));
  }
  return out;
}

void SimDetector::set_ground_truth(std::int64_t frame, std::vector<GroundTruthObject> objects) {
  truth_[frame] = std::move(objects);
}

std::vector<Detection> SimDetector::detect(const FrameHandle& frame, const TileRect& tile) {
  static const std::vector<GroundTruthObject> kEmpty;
  const auto it = truth_.find(frame.index);
  const auto& gt = it == truth_.end() ? kEmpty : it->second;
  Rng rng = Rng::substream(noise_.seed, {static_cast<std::uint64_t>(frame.index),
                                         static_cast<std::uint64_t>(tile.x),
                                         static_cast<std::uint64_t>(tile.y),
                                         static_cast<std::uint64_t>(NoisePurpose::Detection)});
  auto dets = synth_detect(tile, gt, noise_, rng);
  for (auto& d : dets) {
    d.box = BBox{d.box.x_tl - tile.x, d.box.y_tl - tile.y, d.box.x_br - tile.x,
                 d.box.y_br - tile.y};
  }
  return dets;
}

NominalGeometry derive_nominal(const ScenarioConfig& cfg) {
  NominalGeometry g;
  const double alt = cfg.uav.cruise_altitude;
  g.tilt = cfg.auto_tilt ? std::atan2(alt - 0.5 * cfg.elephant.size.z(), cfg.standoff)
                         : cfg.camera.tilt;
  CameraModel cam = cfg.camera;
  cam.tilt = g.tilt;

  // Elephant straight ahead at the standoff, facing away from the UAV.
  WorldState w;
  w.uav_pos = {0.0, 0.0, alt};
  w.uav_yaw = 0.0;
  w.elephant_pos = {cfg.standoff, 0.0, 0.0};
  w.elephant_heading = 0.0;
  const GroundTruthView view = render_ground_truth(w, cam, cfg.elephant.size);
  if (!view.visible) throw ConfigError("standoff", "elephant not visible at the standoff pose");
  g.ref_area = cfg.ref_area > 0.0 ? cfg.ref_area : view.box->area();
  const auto foot = ground_point(cam, camera_pose(w, cam), {view.box->center().x(), view.box->y_br});
  if (!foot) throw ConfigError("standoff", "foot point does not reach the ground");
  g.footpoint_offset = foot->x();
  return g;
}

ScenarioConfig resolve(const ScenarioConfig& cfg) {
  ScenarioConfig out = cfg;
  const NominalGeometry g = derive_nominal(cfg);
  out.camera.tilt = g.tilt;
  out.ref_area = g.ref_area;
  out.noise.seed = cfg.seed;
  out.pipeline.frame_w = cfg.camera.width;
  out.pipeline.frame_h = cfg.camera.height;
  return out;
}

WorldState initial_state(const ScenarioConfig& cfg) {
  WorldState s;
  s.elephant_pos = cfg.elephant.start;
  s.elephant_pos.z() = 0.0;
  s.elephant_vel = Vec3{cfg.elephant.velocity.x(), cfg.elephant.velocity.y(), 0.0};
  if (s.elephant_vel.norm() > 0.0) {
    s.elephant_heading = std::atan2(s.elephant_vel.y(), s.elephant_vel.x());
  }
  s.base_pos = cfg.base_pos;
  s.uav_pos = Vec3{cfg.base_pos.x(), cfg.base_pos.y(), 0.0};
  const Vec3 to_elephant = s.elephant_pos - s.uav_pos;
  s.uav_yaw = std::atan2(to_elephant.y(), to_elephant.x());
  s.tag_awake = geofence_check(s.elephant_pos, s.base_pos, cfg.geofence_radius);
  return s;
}

WorldState step_world(const WorldState& state, const ControlCommand& cmd,
                      const ScenarioConfig& cfg, double dt, bool confirmed_track) {
  WorldState s = state;
  s.t = state.t + dt;

  // Elephant: scripted approach, then flight from a nearby UAV once herding.
  const bool herding = state.phase == MissionPhase::Herd || state.phase == MissionPhase::Return;
  if (herding) {
    if (planar_distance(state.uav_pos, state.elephant_pos) <= cfg.herd_radius) {
      s.elephant_vel = planar_unit(state.elephant_pos - state.uav_pos) * cfg.elephant.flee_speed;
    } else {
      s.elephant_vel = Vec3::Zero();
    }
  } else {
    s.elephant_vel = Vec3{cfg.elephant.velocity.x(), cfg.elephant.velocity.y(), 0.0};
  }
  s.elephant_pos += s.elephant_vel * dt;
  s.elephant_pos.z() = 0.0;
  if (s.elephant_vel.norm() > 0.0) {
    s.elephant_heading = std::atan2(s.elephant_vel.y(), s.elephant_vel.x());
  }
  s.tag_awake = geofence_check(s.elephant_pos, s.base_pos, cfg.geofence_radius);

  // UAV kinematics.
  const UavSpec& uav = cfg.uav;
  double target_alt = uav.cruise_altitude;
  switch (state.phase) {
    case MissionPhase::Idle:
      s.uav_vel = Vec3::Zero();
      target_alt = 0.0;
      break;
    case MissionPhase::Navigate:
      fly_toward(s, state.elephant_pos, uav, dt);
      break;
    case MissionPhase::Track:
    case MissionPhase::Herd: {
      const double max_rate = uav.max_yaw_rate_deg;
      // Positive yaw command turns right, i.e. clockwise seen from above.
      s.uav_yaw = wrap_angle(state.uav_yaw -
                             std::clamp(cmd.yaw_rate, -max_rate, max_rate) * kDegToRad * dt);
      const double fwd = -uav.velocity_per_deg * cmd.pitch_rate;
      const double lat = uav.velocity_per_deg * cmd.roll_rate;
      const double c = std::cos(s.uav_yaw);
      const double sn = std::sin(s.uav_yaw);
      Vec3 v{fwd * c + lat * sn, fwd * sn - lat * c, 0.0};
      const double speed = v.norm();
      if (speed > uav.max_speed) v *= uav.max_speed / speed;
      s.uav_vel.x() = v.x();
      s.uav_vel.y() = v.y();
      break;
    }
    case MissionPhase::Return:
      fly_toward(s, state.base_pos, uav, dt);
      break;
  }
  const double new_alt = approach(state.uav_pos.z(), target_alt, uav.climb_rate * dt);
  s.uav_vel.z() = (new_alt - state.uav_pos.z()) / dt;
  s.uav_pos.x() += s.uav_vel.x() * dt;
  s.uav_pos.y() += s.uav_vel.y() * dt;
  s.uav_pos.z() = std::max(0.0, new_alt);

  // Mission phases advance one step at a time.
  switch (state.phase) {
    case MissionPhase::Idle:
      if (s.tag_awake) s.phase = MissionPhase::Navigate;
      break;
    case MissionPhase::Navigate:
      if (planar_distance(s.uav_pos, s.elephant_pos) <= cfg.camera_handoff_distance) {
        s.phase = MissionPhase::Track;
      }
      break;
    case MissionPhase::Track:
      if (confirmed_track) s.phase = MissionPhase::Herd;
      break;
    case MissionPhase::Herd:
      if (planar_distance(s.elephant_pos, s.base_pos) > cfg.geofence_radius + cfg.herd_exit_margin) {
        s.phase = MissionPhase::Return;
      }
      break;
    case MissionPhase::Return:
      if (planar_distance(s.uav_pos, s.base_pos) <= cfg.waypoint_tolerance) {
        s.phase = MissionPhase::Idle;
      }
      break;
  }
  return s;
}

namespace {

struct CameraFrame {
  FrameHandle handle;
  CameraPose pose;
  std::optional<BBox> gt;
};

// `locked` is the id followed last frame, 0 when none (track ids start at 1).
const TrackReport* pick_target(const FrameResult& r, std::int64_t& locked,
                               const CameraModel& cam) {
  const TrackReport* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& t : r.tracks) {
    if (t.status != TrackStatus::Confirmed) continue;
    if (locked != 0 && t.id == locked) return &t;
    const Vec2 c = t.box.center();
    const double d = std::hypot(c.x() - cam.cx, c.y() - cam.cy);
    if (d < best_d) {
      best_d = d;
      best = &t;
    }
  }
  locked = best ? best->id : 0;
  return best;
}

std::string state_line(const WorldState& s) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %s", s.t,
                s.elephant_pos.x(), s.elephant_pos.y(), s.uav_pos.x(), s.uav_pos.y(),
                s.uav_pos.z(), s.uav_yaw, to_string(s.phase));
  return buf;
}

}  // namespace

SimulationOutput run_simulation(const ScenarioConfig& input, std::optional<std::int64_t> max_steps) {
  input.validate();
  const ScenarioConfig cfg = resolve(input);
  SimulationOutput out;
  out.nominal = derive_nominal(input);

  const CameraModel& cam = cfg.camera;
  SimFeatureMatcher matcher(cam, cfg.noise);
  SimDetector detector(cfg.noise);
  TrackerPipeline pipeline(cfg.pipeline, matcher, detector);

  const double dt = 1.0 / cfg.fps;
  std::int64_t steps = static_cast<std::int64_t>(std::ceil(cfg.duration_s * cfg.fps));
  if (max_steps) steps = std::min(steps, *max_steps);

  WorldState st = initial_state(cfg);
  out.phase_history.push_back(st.phase);
  ControllerState ctl;
  std::optional<CameraFrame> prev;
  std::int64_t target_id = 0;
  std::int64_t cam_index = 0;
  std::chrono::duration<double> tracker_time{0.0};

  for (std::int64_t k = 0; k < steps; ++k) {
    ControlCommand cmd;
    bool confirmed = false;
    const bool camera_on = st.phase == MissionPhase::Track || st.phase == MissionPhase::Herd;

    if (camera_on) {
      const CameraPose pose = camera_pose(st, cam);
      const GroundTruthView view = render_ground_truth(st, cam, cfg.elephant.size);
      ++cam_index;
      const FrameHandle cur{cam_index, st.t};

      FrameMotion motion;
      if (prev) {
        motion.from = prev->pose;
        motion.to = pose;
        motion.has_camera = true;
        if (prev->gt && view.box) {
          if (auto m = box_motion(*prev->gt, *view.box)) motion.objects.push_back({*prev->gt, *m});
        }
      }
      matcher.set_motion(cam_index, std::move(motion));
      std::vector<GroundTruthObject> truth_objects;
      if (view.box) truth_objects.push_back({*view.box, 0});
      detector.set_ground_truth(cam_index, truth_objects);

      const auto t0 = std::chrono::steady_clock::now();
      const FrameResult result =
          pipeline.step(prev ? prev->handle : cur, cur, cam_index);
      tracker_time += std::chrono::steady_clock::now() - t0;

      const TrackReport* target = pick_target(result, target_id, cam);
      if (target) {
        confirmed = true;
        const ControlError err = compute_errors(target->box, cam.width, cam.height, cfg.ref_area);
        const PIDOutput o = pid_step(err, ctl, cfg.gains, dt);
        cmd = o.cmd;
        ctl = o.state;
      } else {
        ctl = ControllerState{};
      }

      FrameResult truth_frame;
      truth_frame.frame_index = cam_index;
      truth_frame.detector_ran = result.detector_ran;
      if (view.box) truth_frame.tracks.push_back({0, *view.box, 0, TrackStatus::Confirmed});

      out.track_lines.push_back(encode_frame(result));
      out.command_lines.push_back(encode_command(cam_index, cmd));
      out.truth_lines.push_back(encode_frame(truth_frame));
      out.frames.push_back(result);
      out.truth.push_back(truth_frame);

      // Trajectory comparison: UAV path pushed forward by the standoff foot
      // point versus the elephant position recovered from the image.
      std::optional<Vec3> observed;
      const std::optional<BBox> foot_box = target ? std::optional<BBox>(target->box) : view.box;
      if (foot_box) observed = ground_point(cam, pose, {foot_box->center().x(), foot_box->y_br});
      if (!observed) observed = st.elephant_pos;
      const double off = out.nominal.footpoint_offset;
      out.match_uav.push_back(Vec3{st.uav_pos.x() + off * std::cos(st.uav_yaw),
                                   st.uav_pos.y() + off * std::sin(st.uav_yaw), 0.0});
      out.match_gt.push_back(Vec3{observed->x(), observed->y(), 0.0});

      prev = CameraFrame{cur, pose, view.box};
    } else {
      prev.reset();
      target_id = 0;
      ctl = ControllerState{};
    }

    out.trajectory.push_back({st.t, st.elephant_pos.x(), st.elephant_pos.y(), st.uav_pos.x(),
                              st.uav_pos.y(), st.phase});
    out.state_trace.push_back(state_line(st));
    ++out.steps;

    const WorldState next = step_world(st, cmd, cfg, dt, confirmed);
    if (next.phase != st.phase) out.phase_history.push_back(next.phase);
    const bool mission_done = st.phase == MissionPhase::Return && next.phase == MissionPhase::Idle;
    st = next;
    if (mission_done) {
      out.trajectory.push_back({st.t, st.elephant_pos.x(), st.elephant_pos.y(), st.uav_pos.x(),
                                st.uav_pos.y(), st.phase});
      out.state_trace.push_back(state_line(st));
      break;
    }
  }

  out.camera_frames = cam_index;
  out.stats = pipeline.stats();
  out.tracker_seconds = tracker_time.count();
  out.trajectory_match = trajectory_match(out.match_uav, out.match_gt, cfg.match_margin);
  return out;
}

std::string trajectory_csv(std::span<const TrajectoryRow> rows) {
  std::string out = "t,ex,ey,ux,uy,phase\n";
  for (const auto& r : rows) {
    out += fixed3(r.t) + "," + fixed3(r.ex) + "," + fixed3(r.ey) + "," + fixed3(r.ux) + "," +
           fixed3(r.uy) + "," + to_string(r.phase) + "\n";
  }
  return out;
}

}  // namespace herdtrack::sim
