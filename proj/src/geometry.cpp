#include "herdtrack/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "herdtrack/errors.hpp"

namespace herdtrack {

namespace {

constexpr double kCollinearRatio = 1e-10;
constexpr double kRankRatio = 1e-10;
constexpr double kMinHomographyDet = 1e-12;
constexpr double kInfinityW = 1e-12;

// Similarity transform moving the centroid to the origin with mean distance
// sqrt(2) from it. Conditions the DLT system.
Eigen::Matrix3d normalizing_transform(std::span<const Vec2> pts) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

Vec2 apply_h(const Eigen::Matrix3d& h, const Vec2& p) {
  const Eigen::Vector3d q = h * p.homogeneous();
  return q.hnormalized();
}

}  // namespace

BBox BBox::normalized() const {
  return {std::min(x_tl, x_br), std::min(y_tl, y_br), std::max(x_tl, x_br),
          std::max(y_tl, y_br)};
}

BBox BBox::dilated(double fraction) const {
  const double dx = 0.5 * fraction * width();
  const double dy = 0.5 * fraction * height();
  return BBox{x_tl - dx, y_tl - dy, x_br + dx, y_br + dy}.normalized();
}

BBox BBox::from_corners(const Vec2& a, const Vec2& b) {
  return BBox{a.x(), a.y(), b.x(), b.y()}.normalized();
}

BBox intersection(const BBox& a, const BBox& b) {
  const double x0 = std::max(a.x_tl, b.x_tl);
  const double y0 = std::max(a.y_tl, b.y_tl);
  const double x1 = std::min(a.x_br, b.x_br);
  const double y1 = std::min(a.y_br, b.y_br);
  if (x1 <= x0 || y1 <= y0) return BBox{x0, y0, x0, y0};
  return BBox{x0, y0, x1, y1};
}

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection(a, b).area();
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

AffineTransform AffineTransform::identity() {
  return from(Eigen::Matrix2d::Identity(), Vec2::Zero());
}

AffineTransform AffineTransform::from(const Eigen::Matrix2d& a, const Vec2& t) {
  AffineTransform out;
  out.m.leftCols<2>() = a;
  out.m.col(2) = t;
  return out;
}

AffineTransform AffineTransform::inverse() const {
  const Eigen::Matrix2d inv = linear().inverse();
  return from(inv, -inv * translation());
}

Homography Homography::translation(double tx, double ty) {
  Homography out;
  out.h(0, 2) = tx;
  out.h(1, 2) = ty;
  return out;
}

Homography Homography::from_matrix(const Eigen::Matrix3d& m) {
  Homography out;
  out.h = m;
  if (m(2, 2) != 0.0) {
    out.h /= m(2, 2);
  }
  return out;
}

Vec2 Homography::apply(const Vec2& p) const {
  const Eigen::Vector3d q = h * p.homogeneous();
  if (std::abs(q.z()) < kInfinityW) {
    throw ProjectiveDegeneracy("point maps to the plane at infinity");
  }
  return q.hnormalized();
}

Eigen::Matrix2d Homography::jacobian(const Vec2& p) const {
  const Eigen::Vector3d q = h * p.homogeneous();
  if (std::abs(q.z()) < kInfinityW) {
    throw ProjectiveDegeneracy("point maps to the plane at infinity");
  }
  const double w = q.z();
  const double u = q.x() / w;
  const double v = q.y() / w;
  Eigen::Matrix2d j;
  j << h(0, 0) - u * h(2, 0), h(0, 1) - u * h(2, 1),
       h(1, 0) - v * h(2, 0), h(1, 1) - v * h(2, 1);
  return j / w;
}

Homography Homography::inverse() const { return from_matrix(h.inverse()); }

Homography Homography::compose(const Homography& first) const {
  return from_matrix(h * first.h);
}

AffineTransform estimate_affine(std::span<const PointMatch> matches) {
  if (matches.size() < 3) {
    throw DegenerateConfiguration("affine fit needs at least 3 matches");
  }
  const double n = static_cast<double>(matches.size());
  Vec2 src_mean = Vec2::Zero();
  Vec2 dst_mean = Vec2::Zero();
  for (const auto& m : matches) {
    src_mean += m.src;
    dst_mean += m.dst;
  }
  src_mean /= n;
  dst_mean /= n;

  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d cross = Eigen::Matrix2d::Zero();
  for (const auto& m : matches) {
    const Vec2 s = m.src - src_mean;
    const Vec2 d = m.dst - dst_mean;
    scatter += s * s.transpose();
    cross += d * s.transpose();
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(1);
  if (hi <= 0.0 || lo <= kCollinearRatio * hi) {
    throw DegenerateConfiguration("affine fit source points are collinear");
  }

  const Eigen::Matrix2d a = scatter.ldlt().solve(cross.transpose()).transpose();
  return AffineTransform::from(a, dst_mean - a * src_mean);
}

Homography estimate_homography(std::span<const PointMatch> matches) {
  if (matches.size() < 4) {
    throw DegenerateConfiguration("homography fit needs at least 4 matches");
  }
  std::vector<Vec2> src;
  std::vector<Vec2> dst;
  src.reserve(matches.size());
  dst.reserve(matches.size());
  for (const auto& m : matches) {
    src.push_back(m.src);
    dst.push_back(m.dst);
  }
  const Eigen::Matrix3d ts = normalizing_transform(src);
  const Eigen::Matrix3d td = normalizing_transform(dst);

  const auto rows = static_cast<Eigen::Index>(2 * matches.size());
  Eigen::MatrixXd a(rows, 9);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Vec2 s = apply_h(ts, src[i]);
    const Vec2 d = apply_h(td, dst[i]);
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.row(r) << -s.x(), -s.y(), -1, 0, 0, 0, d.x() * s.x(), d.x() * s.y(), d.x();
    a.row(r + 1) << 0, 0, 0, -s.x(), -s.y(), -1, d.y() * s.x(), d.y() * s.y(), d.y();
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(7) <= kRankRatio * sv(0)) {
    throw DegenerateConfiguration("homography design matrix is rank deficient");
  }
  const Eigen::VectorXd v = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);

  Eigen::Matrix3d h = td.inverse() * hn * ts;
  if (std::abs(h(2, 2)) > 0.0) {
    h /= h(2, 2);
  } else {
    h /= h.norm();
  }
  if (!h.allFinite() || std::abs(h.determinant()) <= kMinHomographyDet) {
    throw DegenerateConfiguration("estimated homography is singular");
  }
  Homography out;
  out.h = h;
  return out;
}

BBox warp_box(const BBox& box, const Homography& h) {
  return BBox::from_corners(h.apply(box.top_left()), h.apply(box.bottom_right()));
}

BBox transform_box(const BBox& box, const AffineTransform& t) {
  return BBox::from_corners(t.apply(box.top_left()), t.apply(box.bottom_right()));
}

}  // namespace herdtrack
