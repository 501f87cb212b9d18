#pragma once

#include <utility>
#include <vector>

#include "drivegen/scene.hpp"

namespace drivegen::scene {

struct BevConfig {
    int cells = 32;       ///< grid is cells x cells
    double extent = 60.0; ///< side length in meters, centered on the origin pose
};

/// Channel layout of the rasterized grid:
///   0..2                map one-hot per category (lane divider, boundary, crossing)
///   3..3+kPastFrames    agent occupancy, one channel per past frame -p..0
///   then 2 channels     sin/cos of agent headings at frame 0
inline constexpr int kBevMapChannels = 3;
inline constexpr int kBevOccupancyChannels = geom::kPastFrames + 1;
inline constexpr int kBevChannels = kBevMapChannels + kBevOccupancyChannels + 2;

/// Top-down feature raster in the frame of `origin` (cell (0,0) at the
/// rear-right corner; x grows with column, y with row). data is row-major
/// (cells*cells) x kBevChannels, matching the grid layout bilinear_sample
/// expects.
struct BevGrid {
    BevConfig cfg;
    geom::Pose2 origin;
    std::vector<double> data;

    double cell_size() const { return cfg.extent / cfg.cells; }
    double at(int row, int col, int channel) const {
        return data[(static_cast<size_t>(row) * cfg.cells + col) * kBevChannels + channel];
    }
    /// Continuous cell coordinates (col_x, row_y) of a point given in the
    /// origin frame; cell centers sit at integer coordinates.
    std::pair<double, double> to_cell(const geom::Vec2& local) const;
};

/// Rasterizes map polylines (cell trace of every segment) and agent motion
/// (occupancy increments at center cells per past frame; heading sin/cos at
/// the frame-0 cell). Map values are set to 1, occupancy accumulates so a
/// channel sums to the number of in-extent agents at that frame.
BevGrid rasterize_bev(const Scene& s, const BevConfig& cfg, const geom::Pose2& origin);

/// Integer cells crossed by the segment (x0,y0)-(x1,y1) in continuous cell
/// coordinates, clipped to [0, cells)^2. Deterministic supercover walk.
std::vector<std::pair<int, int>> segment_cells(double x0, double y0, double x1, double y1,
                                               int cells);

}  // namespace drivegen::scene
