#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>

#include "herdtrack/errors.hpp"
#include "herdtrack/scenario.hpp"
#include "herdtrack/simulator.hpp"

using namespace herdtrack;
using namespace herdtrack::sim;

namespace {

std::filesystem::path scenario_path(const char* name) {
  const char* root = std::getenv("HERDTRACK_SOURCE_DIR");
  return std::filesystem::path(root ? root : ".") / "scenarios" / name;
}

MissionPhase successor(MissionPhase p) {
  switch (p) {
    case MissionPhase::Idle: return MissionPhase::Navigate;
    case MissionPhase::Navigate: return MissionPhase::Track;
    case MissionPhase::Track: return MissionPhase::Herd;
    case MissionPhase::Herd: return MissionPhase::Return;
    case MissionPhase::Return: return MissionPhase::Idle;
  }
  return MissionPhase::Idle;
}

// Camera at the elephant's mid height, level, looking down +x.
struct LevelRig {
  CameraModel cam;
  WorldState state;
  LevelRig(double d, double heading, double height = 3.0) {
    cam.tilt = 0.0;
    state.uav_pos = {0.0, 0.0, 0.5 * height};
    state.uav_yaw = 0.0;
    state.elephant_pos = {d, 0.0, 0.0};
    state.elephant_heading = heading;
  }
};

}  // namespace

TEST_CASE("geofence boundary examples") {
  const Vec3 base{10.0, -5.0, 0.0};
  const double r = 100.0;
  CHECK_FALSE(geofence_check(base + Vec3{r + 1, 0, 0}, base, r));
  CHECK(geofence_check(base + Vec3{0, r, 0}, base, r));
  CHECK(geofence_check(base + Vec3{r - 1, 0, 0}, base, r));
  // Altitude does not count.
  CHECK(geofence_check(base + Vec3{0, r - 1, 500}, base, r));
}

TEST_CASE("geofence is awake inside the radius and monotone in distance") {
  std::mt19937_64 rng(80);
  std::uniform_real_distribution<double> pos(-300.0, 300.0), rad(1.0, 250.0), z(-10.0, 50.0),
      frac(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 base{pos(rng), pos(rng), 0.0};
    const Vec3 e{pos(rng), pos(rng), z(rng)};
    const double r = rad(rng);
    const double dx = e.x() - base.x(), dy = e.y() - base.y();
    const double d2 = dx * dx + dy * dy;
    if (std::abs(d2 - r * r) > 1e-6) CHECK(geofence_check(e, base, r) == (d2 <= r * r));
    if (geofence_check(e, base, r)) {
      const double s = frac(rng);
      CHECK(geofence_check(base + s * (e - base), base, r));
    }
  }
}

TEST_CASE("wake at the radius moves Idle to Navigate in the same step") {
  ScenarioConfig cfg;
  cfg.geofence_radius = 100.0;
  cfg.elephant.start = {100.5, 0.0, 0.0};
  cfg.elephant.velocity = {-1.0, 0.0, 0.0};
  WorldState s = initial_state(cfg);
  REQUIRE_FALSE(s.tag_awake);
  REQUIRE(s.phase == MissionPhase::Idle);
  const WorldState next = step_world(s, {}, cfg, 0.5, false);
  CHECK(next.elephant_pos.x() == 100.0);
  CHECK(next.tag_awake);
  CHECK(next.phase == MissionPhase::Navigate);
}

TEST_CASE("zero command leaves everything but the scripted motion in place") {
  ScenarioConfig cfg;
  cfg.elephant.velocity = Vec3::Zero();
  WorldState s;
  s.phase = MissionPhase::Track;
  s.elephant_pos = {40.0, 3.0, 0.0};
  s.uav_pos = {10.0, 2.0, cfg.uav.cruise_altitude};
  s.uav_yaw = 0.3;
  const WorldState still = step_world(s, {}, cfg, 1.0 / 30.0, false);
  CHECK(still.uav_pos == s.uav_pos);
  CHECK(still.uav_yaw == s.uav_yaw);
  CHECK(still.elephant_pos == s.elephant_pos);
  CHECK(still.phase == MissionPhase::Track);
  CHECK(still.t > s.t);

  cfg.elephant.velocity = {-1.0, 0.5, 0.0};
  const WorldState moved = step_world(s, {}, cfg, 0.1, false);
  CHECK(moved.uav_pos == s.uav_pos);
  CHECK(moved.elephant_pos.x() == doctest::Approx(39.9));
  CHECK(moved.elephant_pos.y() == doctest::Approx(3.05));
  CHECK(moved.elephant_pos.z() == 0.0);
}

TEST_CASE("on-axis elephant projects to the similar-triangles width") {
  const double d = 30.0;
  // Nearly flat volume turned side-on: every corner sits at depth d.
  LevelRig thin(d, std::numbers::pi / 2);
  const auto v = render_ground_truth(thin.state, thin.cam, Vec3{4.0, 1e-9, 3.0});
  REQUIRE(v.visible);
  CHECK(v.box->width() == doctest::Approx(600.0 * 4.0 / d).epsilon(1e-9));
  CHECK(v.box->height() == doctest::Approx(600.0 * 3.0 / d).epsilon(1e-9));
  CHECK(v.box->center().x() == doctest::Approx(640.0));
  CHECK(v.box->center().y() == doctest::Approx(360.0));

  // With the default 2 m depth the nearest face sets the extent: f*4/(d-1).
  LevelRig thick(d, std::numbers::pi / 2);
  const auto w = render_ground_truth(thick.state, thick.cam);
  REQUIRE(w.visible);
  CHECK(w.box->width() == doctest::Approx(600.0 * 4.0 / (d - 1.0)).epsilon(1e-9));
  CHECK(w.box->x_tl == doctest::Approx(640.0 - 600.0 * 2.0 / (d - 1.0)));
}

TEST_CASE("ground truth is symmetric about the principal point") {
  for (double heading : {0.0, std::numbers::pi / 2, std::numbers::pi}) {
    for (double d : {12.0, 30.0, 80.0}) {
      LevelRig rig(d, heading);
      const auto v = render_ground_truth(rig.state, rig.cam);
      REQUIRE(v.visible);
      CHECK(v.box->x_tl + v.box->x_br == doctest::Approx(2.0 * 640.0));
      CHECK(v.box->y_tl + v.box->y_br == doctest::Approx(2.0 * 360.0));
    }
  }
}

TEST_CASE("an elephant behind the camera is not visible") {
  LevelRig rig(-30.0, 0.0);
  const auto v = render_ground_truth(rig.state, rig.cam);
  CHECK_FALSE(v.visible);
  CHECK_FALSE(v.box.has_value());

  // Far off to the side: in front but outside the frame.
  LevelRig side(5.0, 0.0);
  side.state.elephant_pos = {5.0, 200.0, 0.0};
  CHECK_FALSE(render_ground_truth(side.state, side.cam).visible);
}

TEST_CASE("noiseless synthetic detection is the clipped truth at full confidence") {
  const TileRect tile{384, 0, 512, 411};
  const GroundTruthObject gt[] = {{BBox{300, 100, 500, 200}, 0}, {BBox{1000, 600, 1100, 700}, 1}};
  Rng rng(1);
  const auto dets = synth_detect(tile, gt, NoiseConfig{}, rng);
  REQUIRE(dets.size() == 1);
  CHECK(dets[0].box == BBox{384, 100, 500, 200});
  CHECK(dets[0].confidence == 1.0);
  CHECK(dets[0].class_id == 0);

  NoiseConfig miss;
  miss.det_miss_prob = 1.0;
  for (int i = 0; i < 100; ++i) CHECK(synth_detect(tile, gt, miss, rng).empty());
}

TEST_CASE("detector corner jitter has the configured spread") {
  NoiseConfig noise;
  noise.det_jitter_sigma = 2.0;
  const TileRect tile{0, 0, 1280, 720};
  const BBox truth{500, 300, 700, 420};
  const GroundTruthObject gt[] = {{truth, 0}};
  Rng rng(81);
  double sum = 0.0, sum2 = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto dets = synth_detect(tile, gt, noise, rng);
    REQUIRE(dets.size() == 1);
    const double e = dets[0].box.x_tl - truth.x_tl;
    sum += e;
    sum2 += e * e;
    CHECK(dets[0].confidence >= 0.5);
    CHECK(dets[0].confidence <= 1.0);
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::abs(sd - 2.0) <= 0.05 * 2.0);
}

TEST_CASE("detection draws depend only on seed, frame and tile") {
  NoiseConfig noise;
  noise.det_miss_prob = 0.3;
  noise.det_fp_rate = 2.0;
  noise.det_jitter_sigma = 2.0;
  noise.seed = 5;
  SimDetector a(noise), b(noise);
  const std::vector<GroundTruthObject> gt{{BBox{100, 100, 300, 250}, 0}};
  a.set_ground_truth(4, gt);
  b.set_ground_truth(4, gt);
  const TileRect t0{0, 0, 512, 411}, t1{384, 0, 512, 411};
  // Different query order, same answers.
  const auto a0 = a.detect(FrameHandle{4}, t0);
  const auto a1 = a.detect(FrameHandle{4}, t1);
  const auto b1 = b.detect(FrameHandle{4}, t1);
  const auto b0 = b.detect(FrameHandle{4}, t0);
  REQUIRE(a0.size() == b0.size());
  REQUIRE(a1.size() == b1.size());
  for (std::size_t i = 0; i < a0.size(); ++i) CHECK(a0[i].box == b0[i].box);
  for (std::size_t i = 0; i < a1.size(); ++i) CHECK(a1[i].box == b1[i].box);
}

TEST_CASE("synthetic matches examples") {
  std::vector<Vec2> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(Vec2(3.0 * i, 7.0 + i % 5));
  const auto same = synth_matches(pts, AffineTransform::identity(), NoiseConfig{}, 3);
  REQUIRE(same.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(same[i].valid);
    CHECK(same[i].match.dst == pts[i]);
  }

  NoiseConfig drop;
  drop.flow_drop_prob = 1.0;
  CHECK(valid_matches(synth_matches(pts, Homography::translation(2, 2), drop, 3)).empty());

  // Homography ground truth is applied exactly.
  const auto h = Homography::translation(4, -1);
  const auto moved = synth_matches(pts, h, NoiseConfig{}, 9);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(moved[i].match.dst == pts[i] + Vec2(4, -1));
}

TEST_CASE("noisy matches recover a translation within the standard error") {
  NoiseConfig noise;
  noise.flow_noise_sigma = 1.0;
  noise.seed = 82;
  std::vector<Vec2> pts;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) pts.push_back(Vec2(i - 49.5, j - 49.5));
  const Vec2 shift(6.0, -2.5);
  const auto m = synth_matches(pts, AffineTransform::from(Eigen::Matrix2d::Identity(), shift), noise, 1);
  const auto valid = valid_matches(m);
  REQUIRE(valid.size() == pts.size());
  const auto est = estimate_affine(valid);
  const double bound = 3.0 * noise.flow_noise_sigma / std::sqrt(double(valid.size()));
  CHECK(std::abs(est.m(0, 2) - shift.x()) <= bound);
  CHECK(std::abs(est.m(1, 2) - shift.y()) <= bound);
}

TEST_CASE("trajectory_match examples") {
  std::vector<Vec3> a, b, c, d;
  for (int i = 0; i < 10; ++i) {
    a.push_back(Vec3(i, 2.0 * i, 0.0));
    b.push_back(a.back() + Vec3(0.0, 2.0, 0.0));
    c.push_back(a.back() + Vec3(i % 2 ? 1.5 : 0.5, 0.0, 0.0));
  }
  CHECK(trajectory_match(a, a, 1.0) == 1.0);
  CHECK(trajectory_match(a, b, 1.0) == 0.0);
  CHECK(trajectory_match(a, c, 1.0) == 0.5);
  d = a;
  d.pop_back();
  CHECK_THROWS_AS(trajectory_match(a, d, 1.0), LengthMismatch);
  CHECK(trajectory_match(d, d, 1.0) == 1.0);
}

TEST_CASE("a stationary elephant under perfect sensing is tracked tightly") {
  ScenarioConfig base = load_scenario(scenario_path("noiseless.json"));
  const ScenarioConfig cfg = resolve(base);
  REQUIRE(cfg.noise.noiseless());
  WorldState st;
  st.uav_pos = {0.0, 0.0, cfg.uav.cruise_altitude};
  st.elephant_pos = {cfg.standoff, 2.0, 0.0};
  const CameraPose pose = camera_pose(st, cfg.camera);

  SimFeatureMatcher matcher(cfg.camera, cfg.noise);
  SimDetector detector(cfg.noise);
  TrackerPipeline pipeline(cfg.pipeline, matcher, detector);
  int good = 0;
  const int frames = 300;
  for (std::int64_t k = 1; k <= frames; ++k) {
    const auto view = render_ground_truth(st, cfg.camera, cfg.elephant.size);
    REQUIRE(view.visible);
    FrameMotion motion{pose, pose, k > 1, {}};
    if (k > 1) motion.objects.push_back({*view.box, AffineTransform::identity()});
    matcher.set_motion(k, motion);
    detector.set_ground_truth(k, {{*view.box, 0}});
    const auto r = pipeline.step(FrameHandle{k > 1 ? k - 1 : k}, FrameHandle{k}, k);
    for (const auto& t : r.tracks) {
      if (t.status == TrackStatus::Confirmed && iou(t.box, *view.box) >= 0.9) {
        ++good;
        break;
      }
    }
  }
  CHECK(double(good) / frames >= 0.95);
}

TEST_CASE("phase machine only steps forward") {
  const ScenarioConfig nominal = load_scenario(scenario_path("nominal.json"));
  for (std::uint64_t seed : {42u, 7u}) {
    ScenarioConfig cfg = nominal;
    cfg.seed = seed;
    const auto out = run_simulation(cfg);
    REQUIRE(!out.phase_history.empty());
    CHECK(out.phase_history.front() == MissionPhase::Idle);
    for (std::size_t i = 1; i < out.phase_history.size(); ++i)
      CHECK(out.phase_history[i] == successor(out.phase_history[i - 1]));
    for (std::size_t i = 1; i < out.trajectory.size(); ++i) {
      const auto p = out.trajectory[i - 1].phase, q = out.trajectory[i].phase;
      CHECK((q == p || q == successor(p)));
      CHECK(out.trajectory[i].t > out.trajectory[i - 1].t);
    }
  }
}

TEST_CASE("world invariants hold along a run") {
  const ScenarioConfig cfg = resolve(load_scenario(scenario_path("nominal.json")));
  WorldState s = initial_state(cfg);
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> u(-40.0, 40.0);
  for (int k = 0; k < 3000; ++k) {
    const ControlCommand cmd{u(rng), u(rng), u(rng)};
    const WorldState next = step_world(s, cmd, cfg, 1.0 / cfg.fps, k % 7 == 0);
    CHECK(next.t > s.t);
    CHECK(next.elephant_pos.z() == 0.0);
    CHECK(next.uav_pos.z() >= 0.0);
    CHECK(std::hypot(next.uav_vel.x(), next.uav_vel.y()) <=
          std::max(cfg.uav.cruise_speed, cfg.uav.max_speed) + 1e-9);
    s = next;
  }
}

TEST_CASE("same seed gives identical state traces and streams") {
  const ScenarioConfig cfg = load_scenario(scenario_path("nominal.json"));
  const auto a = run_simulation(cfg, 1500);
  const auto b = run_simulation(cfg, 1500);
  CHECK(a.state_trace == b.state_trace);
  CHECK(a.track_lines == b.track_lines);
  CHECK(a.command_lines == b.command_lines);
  CHECK(trajectory_csv(a.trajectory) == trajectory_csv(b.trajectory));

  ScenarioConfig other = cfg;
  other.seed = 43;
  CHECK(run_simulation(other, 1500).track_lines != a.track_lines);
}

TEST_CASE("trajectory CSV layout") {
  const TrajectoryRow rows[] = {{0.0, 110.0, 0.0, 0.0, 0.0, MissionPhase::Idle},
                                {1.0 / 30.0, -0.0001, 2.5, 1.25, -3.0, MissionPhase::Herd}};
  CHECK(trajectory_csv(rows) ==
        "t,ex,ey,ux,uy,phase\n"
        "0.000,110.000,0.000,0.000,0.000,idle\n"
        "0.033,0.000,2.500,1.250,-3.000,herd\n");
}

TEST_CASE("scenario validation names the key") {
  ScenarioConfig cfg;
  cfg.geofence_radius = 0.0;
  try {
    cfg.validate();
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "geofence_radius");
  }
  cfg = ScenarioConfig{};
  cfg.noise.det_miss_prob = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
