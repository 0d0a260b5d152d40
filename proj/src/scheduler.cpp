#include "herdtrack/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "herdtrack/errors.hpp"

namespace herdtrack {

namespace {

// Start offsets along one axis. The last tile is pinned to the far edge.
// Rounding can leave a one-pixel gap between neighbours; the tile then grows
// until the axis is covered.
std::vector<int> axis_offsets(int extent, int count, double overlap, int& tile_len) {
  const double len = extent / (count - (count - 1) * overlap);
  const double stride = len * (1.0 - overlap);
  if (len < 1.0) {
    throw InvalidGrid("tile extent below one pixel");
  }
  tile_len = std::clamp(static_cast<int>(std::lround(len)), 1, extent);
  std::vector<int> offsets(static_cast<std::size_t>(count));
  for (;;) {
    bool covered = true;
    for (int i = 0; i < count; ++i) {
      const int off = (i == count - 1) ? extent - tile_len
                                       : static_cast<int>(std::lround(i * stride));
      offsets[static_cast<std::size_t>(i)] = off;
      if (i > 0 && off > offsets[static_cast<std::size_t>(i - 1)] + tile_len) covered = false;
    }
    if (covered || tile_len == extent) break;
    ++tile_len;
  }
  return offsets;
}

}  // namespace

void SchedulerConfig::validate() const {
  if (!(conf_min >= 0.0 && conf_min <= 1.0)) throw ConfigError("conf_min", "must be in [0, 1]");
  if (!(age_weight >= 0.0)) throw ConfigError("age_weight", "must be non-negative");
  if (!(nms_iou >= 0.0 && nms_iou <= 1.0)) throw ConfigError("nms_iou", "must be in [0, 1]");
}

TileGrid make_tiles(int frame_w, int frame_h, int cols, int rows, double overlap) {
  if (cols < 1 || rows < 1) throw InvalidGrid("cols and rows must be at least 1");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidGrid("overlap must be in [0, 1)");
  if (frame_w < 1 || frame_h < 1) throw InvalidGrid("frame must be at least 1x1");

  int tile_w = 0;
  int tile_h = 0;
  const auto xs = axis_offsets(frame_w, cols, overlap, tile_w);
  const auto ys = axis_offsets(frame_h, rows, overlap, tile_h);

  TileGrid grid{frame_w, frame_h, cols, rows, overlap, {}};
  grid.tiles.reserve(static_cast<std::size_t>(cols * rows));
  for (int y : ys) {
    for (int x : xs) {
      grid.tiles.push_back(Tile{TileRect{x, y, tile_w, tile_h}, 0, 0});
    }
  }
  return grid;
}

int select_tile(const TileGrid& grid, const SchedulerConfig& cfg) {
  int best = 0;
  double best_priority = -1.0;
  for (std::size_t i = 0; i < grid.tiles.size(); ++i) {
    const auto& t = grid.tiles[i];
    const double priority = t.last_count + cfg.age_weight * t.age;
    if (priority > best_priority) {
      best_priority = priority;
      best = static_cast<int>(i);
    }
  }
  return best;
}

void record_visit(TileGrid& grid, int index, int detection_count) {
  for (std::size_t i = 0; i < grid.tiles.size(); ++i) {
    auto& t = grid.tiles[i];
    if (static_cast<int>(i) == index) {
      t.age = 0;
      t.last_count = detection_count;
    } else {
      ++t.age;
    }
  }
}

bool cut_by_tile(const BBox& box, const TileRect& tile, int frame_w, int frame_h, double margin) {
  const BBox t = tile.as_box();
  return (tile.x > 0 && box.x_tl <= t.x_tl + margin) ||
         (tile.y > 0 && box.y_tl <= t.y_tl + margin) ||
         (tile.x + tile.w < frame_w && box.x_br >= t.x_br - margin) ||
         (tile.y + tile.h < frame_h && box.y_br >= t.y_br - margin);
}

std::vector<Detection> merge_detections(
    std::span<const std::pair<TileRect, std::vector<Detection>>> per_tile,
    const SchedulerConfig& cfg) {
  std::vector<Detection> all;
  for (const auto& [rect, dets] : per_tile) {
    for (const auto& d : dets) {
      if (d.confidence < cfg.conf_min) continue;
      Detection shifted = d;
      shifted.box = BBox{d.box.x_tl + rect.x, d.box.y_tl + rect.y, d.box.x_br + rect.x,
                         d.box.y_br + rect.y};
      all.push_back(shifted);
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.box.x_tl < b.box.x_tl;
  });

  std::vector<Detection> kept;
  for (const auto& d : all) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.class_id == d.class_id && iou(k.box, d.box) > cfg.nms_iou;
    });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

}  // namespace herdtrack
