#include "herdtrack/control.hpp"

#include <algorithm>

#include "herdtrack/errors.hpp"

namespace herdtrack {

namespace {

double channel_step(double error, const ChannelGains& g, ChannelState& s, const PIDGains& gains,
                    double dt) {
  s.integral = std::clamp(s.integral + g.ki * error * dt, -gains.integral_limit,
                          gains.integral_limit);
  const double derivative = (error - s.prev_error) / dt;
  s.prev_error = error;
  const double u = g.kp * error + s.integral + g.kd * derivative;
  return std::clamp(u, -gains.output_limit, gains.output_limit);
}

void check_channel(const ChannelGains& g, const char* name) {
  if (g.kp < 0.0 || g.ki < 0.0 || g.kd < 0.0) throw ConfigError(name, "gains must be non-negative");
}

}  // namespace

void PIDGains::validate() const {
  check_channel(yaw, "yaw");
  check_channel(roll, "roll");
  check_channel(pitch, "pitch");
  if (!(integral_limit > 0.0)) throw ConfigError("integral_limit", "must be positive");
  if (!(output_limit > 0.0)) throw ConfigError("output_limit", "must be positive");
}

ControlError compute_errors(const BBox& box, double frame_w, double frame_h, double ref_area) {
  const Vec2 c = box.center();
  return {c.x() - 0.5 * frame_w, c.y() - 0.5 * frame_h, box.area() - ref_area};
}

PIDOutput pid_step(const ControlError& err, const ControllerState& state, const PIDGains& gains,
                   double dt) {
  PIDOutput out{{}, state};
  out.cmd.yaw_rate = channel_step(err.dx, gains.yaw, out.state.yaw, gains, dt);
  out.cmd.roll_rate = channel_step(err.dx, gains.roll, out.state.roll, gains, dt);
  const double pitch_err = gains.pitch_w_y * err.dy + gains.pitch_w_area * err.dA;
  out.cmd.pitch_rate = channel_step(pitch_err, gains.pitch, out.state.pitch, gains, dt);
  return out;
}

}  // namespace herdtrack
