// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.
// Usage: acceptance [nominal.json]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "herdtrack/association.hpp"
#include "herdtrack/evaluation.hpp"
#include "herdtrack/kalman.hpp"
#include "herdtrack/pipeline.hpp"
#include "herdtrack/scenario.hpp"
#include "herdtrack/scheduler.hpp"
#include "herdtrack/simulator.hpp"
#include "oracles.hpp"

using namespace herdtrack;
using Clock = std::chrono::steady_clock;
using sim::Vec3;

namespace {

// Pinned tolerances and limits.
constexpr double kAssignmentSeconds = 10.0;
constexpr double kKalmanTol = 1e-9;
constexpr double kPsdTol = 1e-9;
constexpr double kWidthTol = 1e-9;
constexpr double kFitTol = 1e-6;
constexpr double kStarvationGamma = 0.5;
constexpr double kTrajectoryMatchMin = 0.80;
constexpr double kScenarioSeconds = 60.0;
constexpr double kIouFractionMin = 0.90;
constexpr std::int64_t kMaxIdSwitches = 1;
constexpr double kMinFps = 32.0;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

double pair_cost(const Eigen::MatrixXd& cost, const std::vector<std::pair<int, int>>& pairs) {
  double total = 0.0;
  for (const auto& [r, c] : pairs) total += cost(r, c);
  return total;
}

Outcome assignment_optimality() {
  std::mt19937_64 rng(1001);
  // Integer costs keep sums exact, so optimal totals compare with ==.
  std::uniform_int_distribution<int> value(0, 1000);
  int mismatches = 0;
  const auto t0 = Clock::now();
  for (int n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 1000; ++trial) {
      Eigen::MatrixXd cost(n, n);
      std::vector<std::vector<double>> rows(std::size_t(n), std::vector<double>(std::size_t(n), 0.0));
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) rows[std::size_t(r)][std::size_t(c)] = cost(r, c) = value(rng);
      const auto pairs = solve_assignment(cost);
      if (int(pairs.size()) != n || pair_cost(cost, pairs) != oracle::brute_force_assignment(rows))
        ++mismatches;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < kAssignmentSeconds,
          fmt("5000 matrices, %.0f mismatches, %.3f s", mismatches, secs)};
}

bool symmetric_psd(const Mat8& p) {
  if ((p - p.transpose()).cwiseAbs().maxCoeff() > kPsdTol) return false;
  const Eigen::SelfAdjointEigenSolver<Mat8> eig(p);
  return eig.eigenvalues().minCoeff() >= -kPsdTol * std::max(1.0, p.diagonal().maxCoeff());
}

Outcome kalman_oracle() {
  // Four decoupled scalar filters are the reference when each corner moves
  // with its own velocity (lambda = 1); prediction with lambda < 1 mixes the
  // corners and is covered by criterion 3.
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> var(0.1, 10.0), u(-3.0, 3.0), dt(0.02, 1.0);
  double worst = 0.0;
  bool psd = true;
  int cycles = 0;
  for (int run = 0; run < 10; ++run) {
    KalmanConfig cfg;
    cfg.lambda = 1.0;
    cfg.dt = dt(rng);
    cfg.q_pos = var(rng);
    cfg.q_vel = var(rng);
    cfg.r_meas = var(rng);
    KalmanState s;
    s.x << 100, 120, 180, 200, 0, 0, 0, 0;
    Vec8 d;
    for (int i = 0; i < 8; ++i) d(i) = var(rng);
    s.P = d.asDiagonal();
    std::vector<oracle::ScalarFilter> f;
    for (int i = 0; i < 4; ++i) f.push_back({s.x(i), s.x(i + 4), d(i), 0.0, d(i + 4)});
    const Vec4 truth(100, 120, 180, 200);
    for (int k = 0; k < 1000; ++k, ++cycles) {
      s = predict(s, cfg);
      for (auto& sf : f) sf.predict(cfg.dt, cfg.q_pos, cfg.q_vel);
      const BBox z{truth(0) + u(rng), truth(1) + u(rng), truth(2) + u(rng), truth(3) + u(rng)};
      s = update(s, z, cfg);
      const double zs[4] = {z.x_tl, z.y_tl, z.x_br, z.y_br};
      for (int i = 0; i < 4; ++i) {
        f[std::size_t(i)].update(zs[i], cfg.r_meas);
        const auto& sf = f[std::size_t(i)];
        worst = std::max({worst, std::abs(s.x(i) - sf.pos), std::abs(s.x(i + 4) - sf.vel),
                          std::abs(s.P(i, i) - sf.p00), std::abs(s.P(i, i + 4) - sf.p01),
                          std::abs(s.P(i + 4, i + 4) - sf.p11)});
      }
      psd = psd && symmetric_psd(s.P);
    }
  }
  return {worst <= kKalmanTol && psd,
          fmt("%.0f cycles, max deviation %.3g, symmetric PSD ", cycles, worst) +
              (psd ? "yes" : "no")};
}

Outcome coupled_prediction() {
  std::mt19937_64 rng(1003);
  std::uniform_real_distribution<double> u(-10.0, 10.0), lam(0.0, 1.0), dt(0.01, 2.0);
  double worst_cv = 0.0, worst_width = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    KalmanConfig cfg;
    cfg.lambda = 1.0;
    cfg.dt = dt(rng);
    Mat8 cv = Mat8::Identity();
    cv.topRightCorner<4, 4>() = cfg.dt * Mat4::Identity();
    worst_cv = std::max(worst_cv, (transition_matrix(cfg) - cv).cwiseAbs().maxCoeff());
    KalmanState s;
    s.x << 50 + u(rng), 60 + u(rng), 150 + u(rng), 160 + u(rng), u(rng), u(rng), u(rng), u(rng);
    const Vec8 expect = cv * s.x;
    worst_cv = std::max(worst_cv, (predict(s, cfg).x - expect).cwiseAbs().maxCoeff());

    cfg.lambda = trial == 0 ? 0.0 : lam(rng);
    const double vx = u(rng), vy = u(rng);
    s.x.tail<4>() << vx, vy, vx, vy;
    const auto p = predict(s, cfg);
    worst_width = std::max({worst_width, std::abs(p.box().width() - s.box().width()),
                            std::abs(p.box().height() - s.box().height())});
  }
  return {worst_cv == 0.0 && worst_width <= kWidthTol,
          fmt("lambda=1 deviation %.3g, width drift %.3g", worst_cv, worst_width)};
}

Outcome transform_recovery() {
  std::mt19937_64 rng(1004);
  std::uniform_real_distribution<double> u(-1.0, 1.0), px(0.0, 1280.0), py(0.0, 720.0);
  double worst_aff = 0.0, worst_hom = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(Vec2(px(rng), py(rng)));

    Eigen::Matrix2d a;
    a << 1 + 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng), 1 + 0.3 * u(rng);
    const auto t = AffineTransform::from(a, Vec2(50 * u(rng), 50 * u(rng)));
    std::vector<PointMatch> m;
    for (const auto& p : pts) m.push_back({p, t.apply(p)});
    const auto ta = estimate_affine(m);
    worst_aff = std::max(worst_aff, (ta.m - t.m).cwiseAbs().maxCoeff());

    Eigen::Matrix3d h;
    h << 1 + 0.1 * u(rng), 0.1 * u(rng), 30 * u(rng), 0.1 * u(rng), 1 + 0.1 * u(rng), 30 * u(rng),
        1e-4 * u(rng), 1e-4 * u(rng), 1;
    const auto truth = Homography::from_matrix(h);
    m.clear();
    for (const auto& p : pts) m.push_back({p, truth.apply(p)});
    const auto est = estimate_homography(m);
    // Both are normalized to h33 = 1; compare the mapped points and the matrix.
    Eigen::Matrix3d e = est.h / est.h(2, 2), g = truth.h / truth.h(2, 2);
    double d = 0.0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(e(r, c) - g(r, c)) / std::max(1.0, std::abs(g(r, c))));
    for (const auto& p : pts) d = std::max(d, (est.apply(p) - truth.apply(p)).norm() / 1280.0);
    worst_hom = std::max(worst_hom, d);
  }
  return {worst_aff <= kFitTol && worst_hom <= kFitTol,
          fmt("1000 affine max error %.3g, 1000 homography max relative error %.3g", worst_aff,
              worst_hom)};
}

class CountingDetector : public Detector {
public:
  std::vector<Detection> detect(const FrameHandle& f, const TileRect&) override {
    frames.push_back(f.index);
    return {};
  }
  double nominal_latency_ms() const override { return 0.0; }
  std::vector<std::int64_t> frames;
};

class StillMatcher : public FeatureMatcher {
public:
  std::vector<MatchResult> match(const FrameHandle&, const FrameHandle&,
                                 std::span<const Vec2> q) override {
    std::vector<MatchResult> out;
    for (const auto& p : q) out.push_back({{p, p}, true});
    return out;
  }
};

Outcome scheduler_fairness() {
  std::mt19937_64 rng(1005);
  std::uniform_int_distribution<int> count(0, 8);
  SchedulerConfig cfg;
  cfg.age_weight = kStarvationGamma;
  auto grid = make_tiles(1280, 720, 3, 2, 0.25);
  const int tiles = int(grid.tiles.size());
  std::vector<int> since(std::size_t(tiles), 0);
  int worst = 0, max_count = 0;
  for (int slot = 0; slot < 10000; ++slot) {
    const int pick = select_tile(grid, cfg);
    const int c = count(rng);
    max_count = std::max(max_count, c);
    record_visit(grid, pick, c);
    for (int i = 0; i < tiles; ++i) {
      since[std::size_t(i)] = i == pick ? 0 : since[std::size_t(i)] + 1;
      worst = std::max(worst, since[std::size_t(i)]);
    }
  }
  const int bound = int(std::ceil(max_count / kStarvationGamma)) + tiles;

  PipelineConfig pc;
  pc.detect_every_n = 3;
  pc.detect_offset = 1;
  StillMatcher m;
  CountingDetector d;
  TrackerPipeline p(pc, m, d);
  std::vector<std::int64_t> ran;
  for (std::int64_t f = 0; f < 3000; ++f) {
    if (p.step(FrameHandle{f > 0 ? f - 1 : 0}, FrameHandle{f}, f).detector_ran) ran.push_back(f);
  }
  bool schedule_ok = ran == d.frames && ran.size() == 1000;
  for (std::size_t i = 0; schedule_ok && i < ran.size(); ++i)
    schedule_ok = ran[i] == 1 + 3 * std::int64_t(i);
  return {worst <= bound && schedule_ok,
          fmt("worst wait %.0f slots (bound %.0f); detector frames 1,4,7,... ", worst, bound) +
              (schedule_ok ? "exact" : "WRONG")};
}

struct ScenarioRun {
  sim::SimulationOutput out;
  double seconds{0.0};
};

ScenarioRun run_timed(const sim::ScenarioConfig& cfg) {
  const auto t0 = Clock::now();
  ScenarioRun r{sim::run_simulation(cfg), 0.0};
  r.seconds = seconds_since(t0);
  return r;
}

Outcome trajectory_match(const ScenarioRun& r) {
  return {r.out.trajectory_match >= kTrajectoryMatchMin && r.seconds < kScenarioSeconds,
          fmt("trajectory_match %.4f over %.0f samples, %.2f s", r.out.trajectory_match,
              double(r.out.match_uav.size()), r.seconds)};
}

Outcome tracking_quality(const ScenarioRun& r) {
  const EvalMetrics m = evaluate_frames(r.out.frames, r.out.truth);
  return {m.samples > 0 && m.iou_fraction >= kIouFractionMin && m.id_switches <= kMaxIdSwitches,
          fmt("IOU>=0.5 on %.4f of %.0f frames, %.0f id switches", m.iou_fraction, double(m.samples),
              double(m.id_switches))};
}

// Ten objects on a tilted camera with a moving background, all through the
// simulator's matcher and detector.
Outcome throughput() {
  sim::ScenarioConfig sc;
  sc.pipeline.kalman.q_pos = 32.0;
  sc.pipeline.flow_r_meas = 32.0;
  const sim::ScenarioConfig cfg = sim::resolve(sc);
  sim::SimFeatureMatcher matcher(cfg.camera, cfg.noise);
  sim::SimDetector detector(cfg.noise);
  TrackerPipeline p(cfg.pipeline, matcher, detector);
  sim::CameraPose pose{Vec3(0, 0, 6), 0.0, cfg.camera.tilt};

  const Vec2 v(0.2, 0.1);
  auto boxes_at = [&](std::int64_t f) {
    std::vector<BBox> out;
    for (int i = 0; i < 10; ++i) {
      const double x = 60 + 240.0 * (i % 5), y = 100 + 320.0 * (i / 5);
      out.push_back({x + v.x() * f, y + v.y() * f, x + 100 + v.x() * f, y + 100 + v.y() * f});
    }
    return out;
  };
  auto feed = [&](std::int64_t f) {
    sim::FrameMotion motion{pose, pose, f > 1, {}};
    const auto prev = boxes_at(f - 1);
    for (const auto& b : prev)
      motion.objects.push_back({b, AffineTransform::from(Eigen::Matrix2d::Identity(), v)});
    matcher.set_motion(f, motion);
    std::vector<sim::GroundTruthObject> gt;
    for (const auto& b : boxes_at(f)) gt.push_back({b, 0});
    detector.set_ground_truth(f, gt);
    return p.step(FrameHandle{f > 1 ? f - 1 : f}, FrameHandle{f}, f);
  };

  std::int64_t f = 1;
  for (; f <= 300; ++f) feed(f);
  const std::size_t live = p.tracks().size();
  const int frames = 600;
  const auto t0 = Clock::now();
  for (int k = 0; k < frames; ++k, ++f) feed(f);
  const double fps = frames / seconds_since(t0);
  return {live == 10 && p.tracks().size() == 10 && fps >= kMinFps,
          fmt("%.0f tracks, %.1f frames/s", double(p.tracks().size()), fps)};
}

Outcome determinism(const sim::ScenarioConfig& nominal, const ScenarioRun& first) {
  auto same = [](const sim::SimulationOutput& a, const sim::SimulationOutput& b) {
    return sim::trajectory_csv(a.trajectory) == sim::trajectory_csv(b.trajectory) &&
           a.track_lines == b.track_lines && a.command_lines == b.command_lines;
  };
  const bool nominal_ok = same(first.out, sim::run_simulation(nominal));
  sim::ScenarioConfig quiet = nominal;
  quiet.noise = sim::NoiseConfig{};
  quiet.seed = 7;
  const bool quiet_ok = same(sim::run_simulation(quiet), sim::run_simulation(quiet));
  return {nominal_ok && quiet_ok, std::string("nominal ") + (nominal_ok ? "identical" : "DIFFERS") +
                                      ", noiseless " + (quiet_ok ? "identical" : "DIFFERS")};
}

Outcome geofence() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> pos(-500.0, 500.0), rad(1.0, 400.0), z(0.0, 100.0),
      frac(0.0, 1.0);
  int wrong = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 base(pos(rng), pos(rng), 0.0);
    const Vec3 e(pos(rng), pos(rng), z(rng));
    const double r = rad(rng);
    const double dx = e.x() - base.x(), dy = e.y() - base.y();
    const double d2 = dx * dx + dy * dy;
    const bool awake = sim::geofence_check(e, base, r);
    if (std::abs(d2 - r * r) > 1e-6 && awake != (d2 <= r * r)) ++wrong;
    if (awake && !sim::geofence_check(base + frac(rng) * (e - base), base, r)) ++wrong;
    // Exactly on the boundary; the base sits at the origin so no rounding creeps in.
    if (!sim::geofence_check(Vec3(r, 0, 0), Vec3::Zero(), r)) ++wrong;
    if (sim::geofence_check(Vec3(0, std::nextafter(r, 2 * r), 0), Vec3::Zero(), r)) ++wrong;
  }
  return {wrong == 0, fmt("10000 placements, %.0f violations", wrong)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path scenario =
      argc > 1 ? std::filesystem::path(argv[1]) : std::filesystem::path("scenarios/nominal.json");

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "assignment optimality", assignment_optimality);
  report(2, "kalman scalar oracle", kalman_oracle);
  report(3, "coupled prediction", coupled_prediction);
  report(4, "transform recovery", transform_recovery);
  report(5, "scheduler", scheduler_fairness);

  sim::ScenarioConfig nominal;
  ScenarioRun run;
  bool loaded = false;
  try {
    nominal = sim::load_scenario(scenario);
    run = run_timed(nominal);
    loaded = true;
  } catch (const std::exception& e) {
    std::printf("cannot run %s: %s\n", scenario.string().c_str(), e.what());
  }
  auto needs_run = [&](std::function<Outcome()> f) {
    return [&, f]() -> Outcome {
      if (!loaded) return {false, "nominal scenario unavailable"};
      return f();
    };
  };
  report(6, "trajectory match", needs_run([&] { return trajectory_match(run); }));
  report(7, "tracking quality", needs_run([&] { return tracking_quality(run); }));
  report(8, "throughput", throughput);
  report(9, "determinism", needs_run([&] { return determinism(nominal, run); }));
  report(10, "geofence", geofence);

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
