#include "herdtrack/scenario.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <set>
#include <sstream>
#include <type_traits>

#include "herdtrack/errors.hpp"

namespace herdtrack::sim {

namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were read so leftovers can
// be reported as unknown.
class Section {
public:
  Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(path(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(path(key), "expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(path(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(path(key), "expected a string");
      }
      out = v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key), "wrong type");
    }
  }

  void read_vec3(const char* key, Vec3& out, bool planar_ok = true) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || !(v.size() == 3 || (planar_ok && v.size() == 2))) {
      throw ConfigError(path(key), "expected an array of 2 or 3 numbers");
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(path(key), "expected numbers");
    }
    out = Vec3{v[0].get<double>(), v[1].get<double>(), v.size() == 3 ? v[2].get<double>() : 0.0};
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), path(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(path(k), "unknown key");
    }
  }

  std::string path(std::string_view key) const {
    return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
  }

private:
  const json& j_;
  std::string prefix_;
  std::set<std::string, std::less<>> seen_;
};

void read_gains(Section& s, ChannelGains& g) {
  s.read("kp", g.kp);
  s.read("ki", g.ki);
  s.read("kd", g.kd);
  s.finish();
}

// Re-throws a module validation error with the module prefix attached.
template <typename F>
void validated(const std::string& prefix, F&& check) {
  try {
    check();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + "." + e.key(), e.what());
  }
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("not valid JSON: ") + e.what());
  }
  ScenarioConfig cfg;
  Section top(root, "");
  top.read("name", cfg.name);
  top.read("seed", cfg.seed);
  top.read("fps", cfg.fps);
  top.read("duration_s", cfg.duration_s);
  top.read_vec3("base_pos", cfg.base_pos);
  top.read("geofence_radius", cfg.geofence_radius);
  top.read("waypoint_tolerance", cfg.waypoint_tolerance);
  top.read("camera_handoff_distance", cfg.camera_handoff_distance);
  top.read("herd_exit_margin", cfg.herd_exit_margin);
  top.read("herd_radius", cfg.herd_radius);
  top.read("standoff", cfg.standoff);
  top.read("match_margin", cfg.match_margin);
  top.read("ref_area", cfg.ref_area);

  if (auto s = top.child("elephant")) {
    s->read_vec3("start", cfg.elephant.start);
    s->read_vec3("velocity", cfg.elephant.velocity);
    s->read("flee_speed", cfg.elephant.flee_speed);
    s->read_vec3("size", cfg.elephant.size, false);
    s->finish();
  }
  if (auto s = top.child("uav")) {
    s->read("cruise_speed", cfg.uav.cruise_speed);
    s->read("cruise_altitude", cfg.uav.cruise_altitude);
    s->read("climb_rate", cfg.uav.climb_rate);
    s->read("max_speed", cfg.uav.max_speed);
    s->read("max_yaw_rate_deg", cfg.uav.max_yaw_rate_deg);
    s->read("velocity_per_deg", cfg.uav.velocity_per_deg);
    s->finish();
  }
  if (auto s = top.child("camera")) {
    s->read("focal", cfg.camera.focal);
    s->read("width", cfg.camera.width);
    s->read("height", cfg.camera.height);
    cfg.camera.cx = 0.5 * cfg.camera.width;
    cfg.camera.cy = 0.5 * cfg.camera.height;
    s->read("cx", cfg.camera.cx);
    s->read("cy", cfg.camera.cy);
    double tilt_deg = cfg.camera.tilt * 180.0 / std::numbers::pi;
    const bool has_tilt = root.at("camera").contains("tilt_deg");
    s->read("tilt_deg", tilt_deg);
    cfg.camera.tilt = tilt_deg * std::numbers::pi / 180.0;
    cfg.auto_tilt = !has_tilt;
    s->finish();
  }
  if (auto s = top.child("noise")) {
    s->read("det_miss_prob", cfg.noise.det_miss_prob);
    s->read("det_fp_rate", cfg.noise.det_fp_rate);
    s->read("det_jitter_sigma", cfg.noise.det_jitter_sigma);
    s->read("flow_noise_sigma", cfg.noise.flow_noise_sigma);
    s->read("flow_drop_prob", cfg.noise.flow_drop_prob);
    s->finish();
  }
  if (auto s = top.child("pipeline")) {
    auto& p = cfg.pipeline;
    s->read("detect_every_n", p.detect_every_n);
    s->read("detect_offset", p.detect_offset);
    s->read("confirm_hits", p.confirm_hits);
    s->read("max_misses", p.max_misses);
    s->read("tile_cols", p.tile_cols);
    s->read("tile_rows", p.tile_rows);
    s->read("tile_overlap", p.tile_overlap);
    s->read("tile_edge_margin", p.tile_edge_margin);
    s->read("background_cols", p.background_cols);
    s->read("background_rows", p.background_rows);
    s->read("background_dilation", p.background_dilation);
    s->read("flow_r_meas", p.flow_r_meas);
    s->finish();
  }
  if (auto s = top.child("kalman")) {
    auto& k = cfg.pipeline.kalman;
    s->read("lambda", k.lambda);
    s->read("dt", k.dt);
    s->read("q_pos", k.q_pos);
    s->read("q_vel", k.q_vel);
    s->read("r_meas", k.r_meas);
    s->finish();
    validated("kalman", [&] { k.validate(); });
  }
  if (auto s = top.child("association")) {
    auto& a = cfg.pipeline.association;
    s->read("maha_gate", a.maha_gate);
    s->read("iou_min", a.iou_min);
    s->read("large_cost", a.large_cost);
    s->finish();
    validated("association", [&] { a.validate(); });
  }
  if (auto s = top.child("scheduler")) {
    auto& sc = cfg.pipeline.scheduler;
    s->read("conf_min", sc.conf_min);
    s->read("age_weight", sc.age_weight);
    s->read("nms_iou", sc.nms_iou);
    s->finish();
    validated("scheduler", [&] { sc.validate(); });
  }
  if (auto s = top.child("sampling")) {
    auto& sp = cfg.pipeline.sampling;
    s->read("density", sp.density);
    s->read("min_points", sp.min_points);
    s->finish();
    validated("sampling", [&] { sp.validate(); });
  }
  if (auto s = top.child("control")) {
    auto& g = cfg.gains;
    if (auto c = s->child("yaw")) read_gains(*c, g.yaw);
    if (auto c = s->child("roll")) read_gains(*c, g.roll);
    if (auto c = s->child("pitch")) read_gains(*c, g.pitch);
    s->read("pitch_w_y", g.pitch_w_y);
    s->read("pitch_w_area", g.pitch_w_area);
    s->read("integral_limit", g.integral_limit);
    s->read("output_limit", g.output_limit);
    s->finish();
    validated("control", [&] { g.validate(); });
  }
  top.finish();
  cfg.pipeline.frame_w = cfg.camera.width;
  cfg.pipeline.frame_h = cfg.camera.height;
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open scenario file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace herdtrack::sim
