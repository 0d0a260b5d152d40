#include "herdtrack/camera.hpp"

#include <cmath>

#include "herdtrack/errors.hpp"

namespace herdtrack::sim {

namespace {

// Maps ground coordinates (X, Y, 1) to homogeneous pixels.
Eigen::Matrix3d ground_projection(const CameraModel& cam, const CameraPose& pose) {
  const Eigen::Matrix3d r = pose.world_to_camera();
  Eigen::Matrix3d g;
  g.col(0) = r.col(0);
  g.col(1) = r.col(1);
  g.col(2) = -r * pose.position;
  return cam.intrinsics() * g;
}

}  // namespace

Eigen::Matrix3d CameraModel::intrinsics() const {
  Eigen::Matrix3d k;
  k << focal, 0, cx, 0, focal, cy, 0, 0, 1;
  return k;
}

void CameraModel::validate() const {
  if (!(focal > 0.0)) throw ConfigError("camera.focal", "must be positive");
  if (width < 1 || height < 1) throw ConfigError("camera.width", "image must be at least 1x1");
  if (!(cx >= 0.0 && cx <= width && cy >= 0.0 && cy <= height)) {
    throw ConfigError("camera.cx", "principal point must lie inside the image");
  }
}

Eigen::Matrix3d CameraPose::world_to_camera() const {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double ct = std::cos(tilt), st = std::sin(tilt);
  const Vec3 forward{cy * ct, sy * ct, -st};
  const Vec3 right{sy, -cy, 0.0};
  const Vec3 down = forward.cross(right);
  Eigen::Matrix3d r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return r;
}

Projection project_point(const CameraModel& cam, const CameraPose& pose, const Vec3& world) {
  const Vec3 c = pose.world_to_camera() * (world - pose.position);
  Projection p;
  p.depth = c.z();
  if (c.z() > 0.0) {
    p.pixel = {cam.focal * c.x() / c.z() + cam.cx, cam.focal * c.y() / c.z() + cam.cy};
  } else {
    p.pixel = {std::nan(""), std::nan("")};
  }
  return p;
}

std::optional<Vec3> ground_point(const CameraModel& cam, const CameraPose& pose, const Vec2& pixel,
                                 double max_range) {
  const Vec3 ray_cam{(pixel.x() - cam.cx) / cam.focal, (pixel.y() - cam.cy) / cam.focal, 1.0};
  const Vec3 ray = pose.world_to_camera().transpose() * ray_cam;
  if (ray.z() >= -1e-12) return std::nullopt;
  const double s = -pose.position.z() / ray.z();
  if (s <= 0.0) return std::nullopt;
  const Vec3 hit = pose.position + s * ray;
  if ((hit - pose.position).norm() > max_range) return std::nullopt;
  return hit;
}

Homography ground_homography(const CameraModel& cam, const CameraPose& from, const CameraPose& to) {
  return Homography::from_matrix(ground_projection(cam, to) *
                                 ground_projection(cam, from).inverse());
}

}  // namespace herdtrack::sim
