#include "herdtrack/association.hpp"

#include <algorithm>
#include <limits>

#include "herdtrack/errors.hpp"

namespace herdtrack {

namespace {

// Shortest-augmenting-path Hungarian method with row/column potentials.
// Requires rows <= cols. Returns the column assigned to each row.
std::vector<int> hungarian_rows_le_cols(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based arrays; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(m + 1, 0.0);
  std::vector<int> owner(m + 1, 0);  // row matched to each column
  std::vector<int> way(m + 1, 0);

  for (int row = 1; row <= n; ++row) {
    owner[0] = row;
    int col0 = 0;
    std::vector<double> min_slack(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[col0] = 1;
      const int r = owner[col0];
      double delta = kInf;
      int col1 = 0;
      for (int c = 1; c <= m; ++c) {
        if (used[c]) continue;
        const double reduced = cost(r - 1, c - 1) - u[r] - v[c];
        if (reduced < min_slack[c]) {
          min_slack[c] = reduced;
          way[c] = col0;
        }
        // Strict comparison keeps the lowest column on ties.
        if (min_slack[c] < delta) {
          delta = min_slack[c];
          col1 = c;
        }
      }
      for (int c = 0; c <= m; ++c) {
        if (used[c]) {
          u[owner[c]] += delta;
          v[c] -= delta;
        } else {
          min_slack[c] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const int prev = way[col0];
      owner[col0] = owner[prev];
      col0 = prev;
    } while (col0 != 0);
  }

  std::vector<int> assigned(n, -1);
  for (int c = 1; c <= m; ++c) {
    if (owner[c] != 0) assigned[owner[c] - 1] = c - 1;
  }
  return assigned;
}

}  // namespace

void AssociationConfig::validate() const {
  if (!(maha_gate > 0.0)) throw ConfigError("maha_gate", "must be positive");
  if (!(iou_min >= 0.0 && iou_min <= 1.0)) throw ConfigError("iou_min", "must be in [0, 1]");
  if (!(large_cost > maha_gate)) throw ConfigError("large_cost", "must exceed maha_gate");
}

double mahalanobis_sq(const MeasurementProjection& proj, const BBox& det) {
  const Eigen::LLT<Mat4> llt(proj.S);
  if (llt.info() != Eigen::Success) {
    throw SingularInnovation("innovation covariance is not positive definite");
  }
  Vec4 residual;
  residual << det.x_tl, det.y_tl, det.x_br, det.y_br;
  residual -= proj.z_hat;
  // With S = L L^T, r^T S^-1 r = |L^-1 r|^2.
  const Vec4 w = llt.matrixL().solve(residual);
  return w.squaredNorm();
}

std::vector<std::pair<int, int>> solve_assignment(const Eigen::MatrixXd& cost,
                                                  double forbidden) {
  std::vector<std::pair<int, int>> pairs;
  if (cost.rows() == 0 || cost.cols() == 0) return pairs;

  if (cost.rows() <= cost.cols()) {
    const auto cols = hungarian_rows_le_cols(cost);
    for (int r = 0; r < static_cast<int>(cols.size()); ++r) {
      if (cols[r] >= 0) pairs.emplace_back(r, cols[r]);
    }
  } else {
    const Eigen::MatrixXd t = cost.transpose();
    const auto rows = hungarian_rows_le_cols(t);
    for (int c = 0; c < static_cast<int>(rows.size()); ++c) {
      if (rows[c] >= 0) pairs.emplace_back(rows[c], c);
    }
    std::sort(pairs.begin(), pairs.end());
  }

  std::erase_if(pairs, [&](const auto& p) { return cost(p.first, p.second) >= forbidden; });
  return pairs;
}

std::vector<std::pair<int, int>> solve_assignment(const Eigen::MatrixXd& cost) {
  return solve_assignment(cost, std::numeric_limits<double>::infinity());
}

AssociationResult associate(std::span<const TrackCandidate> tracks,
                            std::span<const BBox> detections,
                            const AssociationConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(tracks.size());
  const auto m = static_cast<Eigen::Index>(detections.size());
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(n, m, cfg.large_cost);
  std::vector<char> usable(tracks.size(), 1);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& trk = tracks[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto& det = detections[static_cast<std::size_t>(j)];
      if (iou(trk.box, det) < cfg.iou_min) continue;
      double d = 0.0;
      try {
        d = mahalanobis_sq(trk.proj, det);
      } catch (const SingularInnovation&) {
        usable[static_cast<std::size_t>(i)] = 0;
        break;
      }
      if (d <= cfg.maha_gate) cost(i, j) = d;
    }
    if (!usable[static_cast<std::size_t>(i)]) cost.row(i).setConstant(cfg.large_cost);
  }

  AssociationResult result;
  result.matches = solve_assignment(cost, cfg.large_cost);

  std::vector<char> track_taken(tracks.size(), 0);
  std::vector<char> det_taken(detections.size(), 0);
  for (const auto& [t, d] : result.matches) {
    track_taken[static_cast<std::size_t>(t)] = 1;
    det_taken[static_cast<std::size_t>(d)] = 1;
  }
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (!track_taken[i]) result.unmatched_tracks.push_back(static_cast<int>(i));
  }
  for (std::size_t j = 0; j < detections.size(); ++j) {
    if (!det_taken[j]) result.unmatched_detections.push_back(static_cast<int>(j));
  }
  return result;
}

}  // namespace herdtrack
