#pragma once

#include <Eigen/Dense>
#include <optional>

#include "herdtrack/geometry.hpp"

namespace herdtrack::sim {

using Vec3 = Eigen::Vector3d;

/// Pinhole camera rigidly mounted on the UAV, looking along the UAV heading
/// and pitched down by `tilt` radians.
struct CameraModel {
  double focal{600.0};
  double cx{640.0};
  double cy{360.0};
  int width{1280};
  int height{720};
  double tilt{0.0};

  Eigen::Matrix3d intrinsics() const;
  void validate() const;
};

/// World frame: x east, y north, z up. Yaw is counter-clockwise from +x.
struct CameraPose {
  Vec3 position{Vec3::Zero()};
  double yaw{0.0};
  double tilt{0.0};

  /// Rows are the camera right, down and forward axes in world coordinates.
  Eigen::Matrix3d world_to_camera() const;
};

struct Projection {
  Vec2 pixel;
  double depth{0.0};
};

/// Pixel of a world point. `depth` is the distance along the optical axis;
/// it is non-positive for points behind the camera.
Projection project_point(const CameraModel& cam, const CameraPose& pose, const Vec3& world);

/// Intersection of the pixel's viewing ray with the ground plane z = 0.
/// nullopt when the ray points at or above the horizon or the hit lies beyond
/// `max_range` metres.
std::optional<Vec3> ground_point(const CameraModel& cam, const CameraPose& pose, const Vec2& pixel,
                                 double max_range = 1000.0);

/// Image-to-image homography induced by the ground plane between two poses.
Homography ground_homography(const CameraModel& cam, const CameraPose& from, const CameraPose& to);

}  // namespace herdtrack::sim
