#pragma once

#include <span>
#include <utility>
#include <vector>

#include "herdtrack/flow.hpp"
#include "herdtrack/geometry.hpp"

namespace herdtrack {

struct Detection {
  BBox box;
  int class_id{0};
  double confidence{0.0};
};

/// Integer pixel rectangle in frame coordinates.
struct TileRect {
  int x{0};
  int y{0};
  int w{0};
  int h{0};

  BBox as_box() const { return BBox{double(x), double(y), double(x + w), double(y + h)}; }
  friend bool operator==(const TileRect&, const TileRect&) = default;
};

/// Object detector run on a single tile. Detections come back in tile
/// coordinates. Implementations may rescale the tile to their input size.
class Detector {
public:
  virtual ~Detector() = default;
  virtual std::vector<Detection> detect(const FrameHandle& frame, const TileRect& tile) = 0;
  virtual double nominal_latency_ms() const = 0;
};

struct Tile {
  TileRect rect;
  int age{0};         // frames (detector slots) since last processed
  int last_count{0};  // detections seen on the last visit
};

struct TileGrid {
  int frame_w{0};
  int frame_h{0};
  int cols{1};
  int rows{1};
  double overlap{0.0};
  std::vector<Tile> tiles;
};

struct SchedulerConfig {
  double conf_min{0.5};
  double age_weight{0.5};
  double nms_iou{0.5};

  void validate() const;
};

/// Overlapping tile layout. Throws InvalidGrid on bad parameters or when a
/// tile would be smaller than one pixel.
TileGrid make_tiles(int frame_w, int frame_h, int cols, int rows, double overlap);

/// Index of the tile with the highest last_count + age_weight * age. Lowest
/// index wins ties.
int select_tile(const TileGrid& grid, const SchedulerConfig& cfg);

/// Bookkeeping after a visit: the visited tile's age resets and its count is
/// recorded; every other tile ages by one.
void record_visit(TileGrid& grid, int index, int detection_count);

/// True when a frame-space box lies within `margin` px of an edge of the tile
/// that is not also a frame edge. Such a box is likely cut off by the tile.
bool cut_by_tile(const BBox& box, const TileRect& tile, int frame_w, int frame_h, double margin);

/// Shifts per-tile detections into frame coordinates, drops those below
/// conf_min, and runs class-aware greedy NMS. Output is sorted by confidence
/// (descending) then x_tl.
std::vector<Detection> merge_detections(
    std::span<const std::pair<TileRect, std::vector<Detection>>> per_tile,
    const SchedulerConfig& cfg);

}  // namespace herdtrack
