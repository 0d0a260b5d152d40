#include "herdtrack/kalman.hpp"

#include <utility>

#include "herdtrack/errors.hpp"

namespace herdtrack {

namespace {

using Mat48 = Eigen::Matrix<double, 4, 8>;

Mat48 measurement_matrix() {
  Mat48 h = Mat48::Zero();
  h.leftCols<4>().setIdentity();
  return h;
}

// Swap the x (axis 0) or y (axis 1) components of the two corners, in both
// mean and covariance.
void swap_corners(KalmanState& s, int axis) {
  Eigen::PermutationMatrix<8> perm;
  perm.setIdentity();
  perm.indices()(axis) = axis + 2;
  perm.indices()(axis + 2) = axis;
  perm.indices()(axis + 4) = axis + 6;
  perm.indices()(axis + 6) = axis + 4;
  s.x = perm * s.x;
  s.P = perm * s.P * perm.transpose();
}

// Keeps tl <= br by swapping the corner roles when they cross.
void renormalize(KalmanState& s) {
  for (int axis = 0; axis < 2; ++axis) {
    if (s.x(axis) > s.x(axis + 2)) swap_corners(s, axis);
  }
}

void symmetrize(Mat8& p) { p = 0.5 * (p + p.transpose()).eval(); }

}  // namespace

void KalmanConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda", "must be in [0, 1]");
  if (!(dt > 0.0)) throw ConfigError("dt", "must be positive");
  if (!(q_pos > 0.0)) throw ConfigError("q_pos", "must be positive");
  if (!(q_vel > 0.0)) throw ConfigError("q_vel", "must be positive");
  if (!(r_meas > 0.0)) throw ConfigError("r_meas", "must be positive");
}

Mat8 transition_matrix(const KalmanConfig& cfg) {
  using namespace state_index;
  Mat8 f = Mat8::Identity();
  const double own = cfg.lambda * cfg.dt;
  const double other = (1.0 - cfg.lambda) * cfg.dt;
  for (int axis = 0; axis < 2; ++axis) {
    const int tl = axis;
    const int br = axis + 2;
    f(tl, tl + kVelOffset) = own;
    f(tl, br + kVelOffset) = other;
    f(br, br + kVelOffset) = own;
    f(br, tl + kVelOffset) = other;
  }
  return f;
}

Mat8 process_noise(const KalmanConfig& cfg) {
  Vec8 diag;
  diag << Vec4::Constant(cfg.q_pos), Vec4::Constant(cfg.q_vel);
  return (diag * cfg.dt).asDiagonal();
}

KalmanState initiate(const BBox& box, const KalmanConfig& cfg) {
  const BBox b = box.normalized();
  KalmanState s;
  s.x << b.x_tl, b.y_tl, b.x_br, b.y_br, 0, 0, 0, 0;
  Vec8 diag;
  diag << Vec4::Constant(10.0 * cfg.r_meas), Vec4::Constant(100.0 * cfg.q_vel);
  s.P = diag.asDiagonal();
  return s;
}

KalmanState predict(const KalmanState& state, const KalmanConfig& cfg) {
  const Mat8 f = transition_matrix(cfg);
  KalmanState out;
  out.x = f * state.x;
  out.P = f * state.P * f.transpose() + process_noise(cfg);
  symmetrize(out.P);
  renormalize(out);
  return out;
}

MeasurementProjection project(const KalmanState& state, const KalmanConfig& cfg) {
  MeasurementProjection out;
  out.z_hat = state.x.head<4>();
  out.S = state.P.topLeftCorner<4, 4>() + cfg.r_meas * Mat4::Identity();
  return out;
}

KalmanState update(const KalmanState& state, const BBox& z, const KalmanConfig& cfg) {
  const Mat48 h = measurement_matrix();
  const MeasurementProjection proj = project(state, cfg);
  const Eigen::LLT<Mat4> llt(proj.S);
  if (llt.info() != Eigen::Success) {
    throw SingularInnovation("innovation covariance is not positive definite");
  }
  const BBox zn = z.normalized();
  Vec4 meas;
  meas << zn.x_tl, zn.y_tl, zn.x_br, zn.y_br;

  // K = P H^T S^-1, computed as (S^-1 H P)^T since P and S are symmetric.
  const Eigen::Matrix<double, 8, 4> gain = llt.solve(h * state.P).transpose();
  const Mat8 i_kh = Mat8::Identity() - gain * h;

  KalmanState out;
  out.x = state.x + gain * (meas - proj.z_hat);
  // Joseph form keeps P positive semi-definite under round-off.
  out.P = i_kh * state.P * i_kh.transpose() +
          gain * (cfg.r_meas * Mat4::Identity()) * gain.transpose();
  symmetrize(out.P);
  renormalize(out);
  return out;
}

KalmanState apply_camera_motion(const KalmanState& state, const Homography& h) {
  using namespace state_index;
  Mat8 jac = Mat8::Zero();
  KalmanState out = state;
  for (int corner = 0; corner < 2; ++corner) {
    const int pos = 2 * corner;
    const int vel = pos + kVelOffset;
    const Vec2 p = state.x.segment<2>(pos);
    const Eigen::Matrix2d j = h.jacobian(p);
    out.x.segment<2>(pos) = h.apply(p);
    out.x.segment<2>(vel) = j * state.x.segment<2>(vel);
    jac.block<2, 2>(pos, pos) = j;
    jac.block<2, 2>(vel, vel) = j;
  }
  out.P = jac * state.P * jac.transpose();
  symmetrize(out.P);
  renormalize(out);
  return out;
}

}  // namespace herdtrack
