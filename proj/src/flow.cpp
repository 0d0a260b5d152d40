#include "herdtrack/flow.hpp"

#include <algorithm>
#include <cmath>

#include "herdtrack/errors.hpp"

namespace herdtrack {

void SampleSpec::validate() const {
  if (!(density > 0.0)) throw ConfigError("density", "must be positive");
  if (min_points < 3) throw ConfigError("min_points", "must be at least 3");
}

std::vector<Vec2> sample_points(const BBox& box, const SampleSpec& spec) {
  const double w = box.width();
  const double h = box.height();
  if (!(w > 0.0) || !(h > 0.0)) {
    throw DegenerateBox("cannot sample points in a zero-area box");
  }
  const int count = std::max(spec.min_points,
                             static_cast<int>(std::lround(box.area() * spec.density / 1000.0)));

  // At least two columns and two rows so the points are never collinear.
  const int max_cols = std::max(2, (count + 1) / 2);
  const int cols = std::clamp(static_cast<int>(std::ceil(std::sqrt(count * w / h))), 2, max_cols);
  const int rows = (count + cols - 1) / cols;

  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int r = 0; r < rows && static_cast<int>(pts.size()) < count; ++r) {
    for (int c = 0; c < cols && static_cast<int>(pts.size()) < count; ++c) {
      pts.emplace_back(box.x_tl + (c + 0.5) * w / cols, box.y_tl + (r + 0.5) * h / rows);
    }
  }
  return pts;
}

std::vector<Vec2> sample_background(double frame_w, double frame_h, int cols, int rows,
                                    std::span<const BBox> exclusions) {
  std::vector<Vec2> pts;
  if (cols < 1 || rows < 1) return pts;
  pts.reserve(static_cast<std::size_t>(cols * rows));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Vec2 p{(c + 0.5) * frame_w / cols, (r + 0.5) * frame_h / rows};
      const bool masked = std::any_of(exclusions.begin(), exclusions.end(),
                                      [&](const BBox& b) { return b.contains(p); });
      if (!masked) pts.push_back(p);
    }
  }
  return pts;
}

BBox propagate_track(const BBox& box, std::span<const PointMatch> matches) {
  return transform_box(box, estimate_affine(matches));
}

CameraMotion estimate_camera_motion(std::span<const PointMatch> background_matches) {
  if (background_matches.size() < 4) {
    return {Homography::identity(), true};
  }
  try {
    return {estimate_homography(background_matches), false};
  } catch (const DegenerateConfiguration&) {
    return {Homography::identity(), true};
  }
}

std::vector<PointMatch> valid_matches(std::span<const MatchResult> results) {
  std::vector<PointMatch> out;
  out.reserve(results.size());
  for (const auto& r : results) {
    if (r.valid && r.match.dst.allFinite()) out.push_back(r.match);
  }
  return out;
}

}  // namespace herdtrack
