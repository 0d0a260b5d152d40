#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "herdtrack/geometry.hpp"

namespace herdtrack {

/// Opaque reference to one video frame. The library never touches pixels;
/// matchers and detectors resolve the handle however they like.
struct FrameHandle {
  std::int64_t index{0};
  double timestamp{0.0};
};

struct MatchResult {
  PointMatch match;
  bool valid{false};
};

/// Point tracker between two frames (optical flow in a real deployment).
/// Returns one entry per query point, in query order, with match.src equal
/// to the query point.
class FeatureMatcher {
public:
  virtual ~FeatureMatcher() = default;
  virtual std::vector<MatchResult> match(const FrameHandle& prev, const FrameHandle& cur,
                                         std::span<const Vec2> query) = 0;
};

struct SampleSpec {
  double density{1.0};  // points per 1000 px^2
  int min_points{9};

  void validate() const;
};

/// Deterministic grid of max(min_points, round(area * density / 1000))
/// points strictly inside the box. Throws DegenerateBox for zero area.
std::vector<Vec2> sample_points(const BBox& box, const SampleSpec& spec);

/// Regular cols x rows grid over the frame, skipping points that fall inside
/// any of the (already dilated) exclusion boxes.
std::vector<Vec2> sample_background(double frame_w, double frame_h, int cols, int rows,
                                    std::span<const BBox> exclusions);

/// Affine fit of the matches applied to the box corners.
/// Throws DegenerateConfiguration when the fit is impossible.
BBox propagate_track(const BBox& box, std::span<const PointMatch> matches);

struct CameraMotion {
  Homography h;
  bool insufficient_data{false};
};

/// Background homography; identity with the flag set when there are fewer
/// than four matches or the fit is degenerate.
CameraMotion estimate_camera_motion(std::span<const PointMatch> background_matches);

struct Propagation {
  BBox new_box;
  int n_inliers{0};
  Homography camera_h;
};

/// Valid matches only.
std::vector<PointMatch> valid_matches(std::span<const MatchResult> results);

}  // namespace herdtrack
