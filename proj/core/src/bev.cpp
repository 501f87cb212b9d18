#include "drivegen/bev.hpp"

#include <cmath>
#include <limits>

#include "drivegen/check.hpp"

namespace drivegen::scene {

using geom::Vec2;

std::pair<double, double> BevGrid::to_cell(const Vec2& local) const {
    const double size = cell_size();
    return {(local.x + cfg.extent / 2) / size - 0.5, (local.y + cfg.extent / 2) / size - 0.5};
}

std::vector<std::pair<int, int>> segment_cells(double x0, double y0, double x1, double y1,
                                               int cells) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    auto cell_of = [](double v) { return static_cast<int>(std::floor(v + 0.5)); };

    std::vector<std::pair<int, int>> out;
    auto push = [&](int x, int y) {
        if (x >= 0 && x < cells && y >= 0 && y < cells) out.push_back({x, y});
    };

    int cx = cell_of(x0), cy = cell_of(y0);
    const int ex = cell_of(x1), ey = cell_of(y1);
    push(cx, cy);

    const double dx = x1 - x0, dy = y1 - y0;
    const int sx = dx > 0 ? 1 : -1;
    const int sy = dy > 0 ? 1 : -1;
    // parametric position of the next cell-boundary crossing on each axis
    double tx = dx == 0.0 ? kInf : ((cx + sx * 0.5) - x0) / dx;
    double ty = dy == 0.0 ? kInf : ((cy + sy * 0.5) - y0) / dy;
    const double tdx = dx == 0.0 ? kInf : std::abs(1.0 / dx);
    const double tdy = dy == 0.0 ? kInf : std::abs(1.0 / dy);

    int guard = 4 * (std::abs(ex - cx) + std::abs(ey - cy)) + 8;
    while ((cx != ex || cy != ey) && guard-- > 0) {
        if (tx <= ty) {
            cx += sx;
            tx += tdx;
        } else {
            cy += sy;
            ty += tdy;
        }
        push(cx, cy);
    }
    return out;
}

BevGrid rasterize_bev(const Scene& s, const BevConfig& cfg, const geom::Pose2& origin) {
    check_arg(cfg.cells >= 4, "rasterize_bev: grid too small");
    check_arg(cfg.extent > 0.0, "rasterize_bev: extent must be positive");

    BevGrid grid;
    grid.cfg = cfg;
    grid.origin = origin;
    grid.data.assign(static_cast<size_t>(cfg.cells) * cfg.cells * kBevChannels, 0.0);

    const geom::Pose2 inv = geom::se2_invert(origin);
    auto write = [&](int col, int row, int channel) -> double& {
        return grid.data[(static_cast<size_t>(row) * cfg.cells + col) * kBevChannels + channel];
    };
    auto cell_of = [](double v) { return static_cast<int>(std::floor(v + 0.5)); };

    // map one-hot channels: trace every polyline segment through the grid
    for (const geom::Polyline& line : s.map) {
        const int channel = static_cast<int>(line.category);
        for (size_t i = 0; i + 1 < line.points.size(); ++i) {
            const auto [ax, ay] = grid.to_cell(geom::se2_apply(inv, line.points[i]));
            const auto [bx, by] = grid.to_cell(geom::se2_apply(inv, line.points[i + 1]));
            for (const auto& [cx, cy] : segment_cells(ax, ay, bx, by, cfg.cells)) {
                write(cx, cy, channel) = 1.0;
            }
        }
    }

    // agent occupancy per past frame plus frame-0 heading components
    for (const AgentRecord& a : s.agents) {
        for (int t = -geom::kPastFrames; t <= 0; ++t) {
            const geom::Waypoint& w = a.track.waypoints[track_index(t)];
            const auto [cxf, cyf] = grid.to_cell(geom::se2_apply(inv, w.pos()));
            const int cx = cell_of(cxf), cy = cell_of(cyf);
            if (cx < 0 || cx >= cfg.cells || cy < 0 || cy >= cfg.cells) continue;
            write(cx, cy, kBevMapChannels + (t + geom::kPastFrames)) += 1.0;
            if (t == 0) {
                const double rel = pose_at(a.track, 0).heading - origin.heading;
                write(cx, cy, kBevMapChannels + kBevOccupancyChannels) += std::sin(rel);
                write(cx, cy, kBevMapChannels + kBevOccupancyChannels + 1) += std::cos(rel);
            }
        }
    }
    return grid;
}

}  // namespace drivegen::scene
