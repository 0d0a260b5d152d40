#pragma once

#include <Eigen/Dense>

#include "herdtrack/geometry.hpp"

namespace herdtrack {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;
using Mat8 = Eigen::Matrix<double, 8, 8>;

/// State layout: positions (x_tl, y_tl, x_br, y_br) followed by the matching
/// velocities, in pixels and pixels per frame.
namespace state_index {
inline constexpr int kXtl = 0;
inline constexpr int kYtl = 1;
inline constexpr int kXbr = 2;
inline constexpr int kYbr = 3;
inline constexpr int kVelOffset = 4;
}  // namespace state_index

struct KalmanState {
  Vec8 x{Vec8::Zero()};
  Mat8 P{Mat8::Identity()};

  BBox box() const { return BBox{x(0), x(1), x(2), x(3)}; }
};

struct KalmanConfig {
  // Weight of a corner's own velocity in its position update; the opposite
  // corner gets (1 - lambda).
  double lambda{0.6};
  double dt{1.0};
  double q_pos{1.0};
  double q_vel{0.25};
  double r_meas{1.0};

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct MeasurementProjection {
  Vec4 z_hat{Vec4::Zero()};
  Mat4 S{Mat4::Identity()};
};

/// Coupled constant-velocity transition matrix.
Mat8 transition_matrix(const KalmanConfig& cfg);
Mat8 process_noise(const KalmanConfig& cfg);

/// Fresh state from a first detection: zero velocity, wide prior.
KalmanState initiate(const BBox& box, const KalmanConfig& cfg);

KalmanState predict(const KalmanState& state, const KalmanConfig& cfg);

/// Correction with a box measurement. Throws SingularInnovation if the
/// innovation covariance cannot be factored.
KalmanState update(const KalmanState& state, const BBox& z, const KalmanConfig& cfg);

MeasurementProjection project(const KalmanState& state, const KalmanConfig& cfg);

/// Re-expresses the state in the coordinates of the next camera frame.
/// Corner positions go through `h`; velocities and covariance go through the
/// local Jacobian of `h` at each corner.
KalmanState apply_camera_motion(const KalmanState& state, const Homography& h);

}  // namespace herdtrack
