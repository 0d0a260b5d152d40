#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

#include "herdtrack/geometry.hpp"
#include "herdtrack/kalman.hpp"

namespace herdtrack {

struct AssociationConfig {
  // 0.95 quantile of chi-square with 4 degrees of freedom.
  double maha_gate{9.4877};
  double iou_min{0.3};
  double large_cost{1e6};

  void validate() const;
};

struct AssociationResult {
  std::vector<std::pair<int, int>> matches;  // (track, detection)
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_detections;
};

/// What association needs to know about a track.
struct TrackCandidate {
  MeasurementProjection proj;
  BBox box;
};

/// Squared Mahalanobis distance of `det` from the projected track.
/// Throws SingularInnovation when S cannot be factored.
double mahalanobis_sq(const MeasurementProjection& proj, const BBox& det);

/// Minimum-cost assignment of size min(rows, cols) (Hungarian method,
/// shortest augmenting paths). Pairs whose cost is >= `forbidden` are removed
/// from the result. Output is sorted by row.
std::vector<std::pair<int, int>> solve_assignment(const Eigen::MatrixXd& cost,
                                                  double forbidden);

/// Same as above with no forbidden threshold.
std::vector<std::pair<int, int>> solve_assignment(const Eigen::MatrixXd& cost);

AssociationResult associate(std::span<const TrackCandidate> tracks,
                            std::span<const BBox> detections,
                            const AssociationConfig& cfg);

}  // namespace herdtrack
