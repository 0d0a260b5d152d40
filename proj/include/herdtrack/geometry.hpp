#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace herdtrack {

using Vec2 = Eigen::Vector2d;

/// Axis-aligned box in pixel coordinates, stored by its two defining corners.
/// Every module uses this corner form; there is no center/size variant.
struct BBox {
  double x_tl{0.0};
  double y_tl{0.0};
  double x_br{0.0};
  double y_br{0.0};

  double width() const { return x_br - x_tl; }
  double height() const { return y_br - y_tl; }
  double area() const { return width() * height(); }
  Vec2 center() const { return {0.5 * (x_tl + x_br), 0.5 * (y_tl + y_br)}; }
  Vec2 top_left() const { return {x_tl, y_tl}; }
  Vec2 bottom_right() const { return {x_br, y_br}; }

  bool valid() const { return x_tl <= x_br && y_tl <= y_br; }
  bool contains(const Vec2& p) const {
    return p.x() >= x_tl && p.x() <= x_br && p.y() >= y_tl && p.y() <= y_br;
  }

  /// Swap coordinates where needed so that tl <= br on both axes.
  BBox normalized() const;
  /// Grow (or shrink, for negative `fraction`) about the center by a fraction of
  /// the width and height.
  BBox dilated(double fraction) const;

  static BBox from_corners(const Vec2& a, const Vec2& b);

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Intersection box; empty (zero area) when the inputs are disjoint.
BBox intersection(const BBox& a, const BBox& b);

/// Intersection over union. Zero when the union is zero.
double iou(const BBox& a, const BBox& b);

struct PointMatch {
  Vec2 src;
  Vec2 dst;
};

/// Maps (x, y) to A * (x, y) + t.
struct AffineTransform {
  Eigen::Matrix<double, 2, 3> m{Eigen::Matrix<double, 2, 3>::Zero()};

  static AffineTransform identity();
  static AffineTransform from(const Eigen::Matrix2d& a, const Vec2& t);

  Eigen::Matrix2d linear() const { return m.leftCols<2>(); }
  Vec2 translation() const { return m.col(2); }
  Vec2 apply(const Vec2& p) const { return linear() * p + translation(); }
  AffineTransform inverse() const;
};

/// Planar projective map. Normalized so that h(2,2) == 1 whenever h(2,2) != 0.
struct Homography {
  Eigen::Matrix3d h{Eigen::Matrix3d::Identity()};

  static Homography identity() { return {}; }
  static Homography translation(double tx, double ty);
  static Homography from_matrix(const Eigen::Matrix3d& m);

  /// Throws ProjectiveDegeneracy when p maps to the plane at infinity.
  Vec2 apply(const Vec2& p) const;
  /// Jacobian of the projective map at p.
  Eigen::Matrix2d jacobian(const Vec2& p) const;
  Homography inverse() const;
  Homography compose(const Homography& first) const;  // this ∘ first
};

/// Least-squares affine fit. Requires at least three non-collinear source
/// points; throws DegenerateConfiguration otherwise.
AffineTransform estimate_affine(std::span<const PointMatch> matches);

/// Normalized DLT homography fit. Requires at least four matches and a design
/// matrix with a one-dimensional null space; throws DegenerateConfiguration
/// otherwise.
Homography estimate_homography(std::span<const PointMatch> matches);

/// Maps both defining corners through `h` and renormalizes.
BBox warp_box(const BBox& box, const Homography& h);

/// Maps both defining corners through `t` and renormalizes.
BBox transform_box(const BBox& box, const AffineTransform& t);

}  // namespace herdtrack
