#pragma once

#include "herdtrack/geometry.hpp"

namespace herdtrack {

/// Image-space servo errors: centroid offset from the frame center and area
/// offset from the reference box.
struct ControlError {
  double dx{0.0};
  double dy{0.0};
  double dA{0.0};
};

struct ChannelGains {
  double kp{0.0};
  double ki{0.0};
  double kd{0.0};
};

struct PIDGains {
  ChannelGains yaw;
  ChannelGains roll;
  ChannelGains pitch;
  // Pitch acts on pitch_w_y * dy + pitch_w_area * dA.
  double pitch_w_y{1.0};
  double pitch_w_area{0.01};
  // Bound on each channel's accumulated integral term.
  double integral_limit{10.0};
  double output_limit{30.0};

  void validate() const;
};

struct ControlCommand {
  double yaw_rate{0.0};    // deg/s, positive turns toward +dx
  double roll_rate{0.0};   // deg/s, positive strafes toward +dx
  double pitch_rate{0.0};  // deg/s, positive backs away (nose up)
};

struct ChannelState {
  double integral{0.0};  // already multiplied by ki
  double prev_error{0.0};
};

struct ControllerState {
  ChannelState yaw;
  ChannelState roll;
  ChannelState pitch;
};

ControlError compute_errors(const BBox& box, double frame_w, double frame_h, double ref_area);

struct PIDOutput {
  ControlCommand cmd;
  ControllerState state;
};

/// One controller tick. The derivative on the first tick is taken against a
/// zero previous error.
PIDOutput pid_step(const ControlError& err, const ControllerState& state, const PIDGains& gains,
                   double dt);

}  // namespace herdtrack
