#include "drivegen/geom.hpp"

#include <algorithm>
#include <limits>

#include "drivegen/check.hpp"

namespace drivegen::geom {

double normalize_heading(double h) {
    constexpr double kPi = 3.14159265358979323846;
    constexpr double kTwoPi = 2.0 * kPi;
    h = std::fmod(h, kTwoPi);
    if (h <= -kPi) h += kTwoPi;
    if (h > kPi) h -= kTwoPi;
    return h;
}

Vec2 se2_apply(const Pose2& pose, const Vec2& p) {
    const double c = std::cos(pose.heading);
    const double s = std::sin(pose.heading);
    return {pose.x + c * p.x - s * p.y, pose.y + s * p.x + c * p.y};
}

std::vector<Vec2> se2_apply(const Pose2& pose, std::span<const Vec2> pts) {
    std::vector<Vec2> out;
    out.reserve(pts.size());
    for (const Vec2& p : pts) out.push_back(se2_apply(pose, p));
    return out;
}

Trajectory se2_apply(const Pose2& pose, const Trajectory& traj, Frame result_frame) {
    Trajectory out;
    out.frame = result_frame;
    out.waypoints.reserve(traj.waypoints.size());
    for (const Waypoint& w : traj.waypoints) {
        Vec2 p = se2_apply(pose, {w.x, w.y});
        out.waypoints.push_back({p.x, p.y, w.t_index});
    }
    return out;
}

Pose2 se2_invert(const Pose2& pose) {
    const double c = std::cos(pose.heading);
    const double s = std::sin(pose.heading);
    // R^T * (-t)
    return {-(c * pose.x + s * pose.y), -(-s * pose.x + c * pose.y),
            normalize_heading(-pose.heading)};
}

Pose2 se2_compose(const Pose2& a, const Pose2& b) {
    Vec2 t = se2_apply(a, Vec2{b.x, b.y});
    return {t.x, t.y, normalize_heading(a.heading + b.heading)};
}

std::array<Vec2, 4> box_corners(const OrientedBox& box) {
    const double c = std::cos(box.center.heading);
    const double s = std::sin(box.center.heading);
    const Vec2 axis_l{c, s};
    const Vec2 axis_w{-s, c};
    const Vec2 dl = axis_l * (0.5 * box.length);
    const Vec2 dw = axis_w * (0.5 * box.width);
    const Vec2 ctr{box.center.x, box.center.y};
    return {ctr + dl + dw, ctr + dl - dw, ctr - dl - dw, ctr - dl + dw};
}

double box_separation(const OrientedBox& a, const OrientedBox& b) {
    check_arg(a.length > 0 && a.width > 0 && b.length > 0 && b.width > 0,
              "box_separation: boxes must have positive extent");
    const auto axes_of = [](const OrientedBox& box) {
        const double c = std::cos(box.center.heading);
        const double s = std::sin(box.center.heading);
        return std::array<Vec2, 2>{Vec2{c, s}, Vec2{-s, c}};
    };
    const auto ax_a = axes_of(a);
    const auto ax_b = axes_of(b);
    const Vec2 delta{b.center.x - a.center.x, b.center.y - a.center.y};

    const std::array<Vec2, 4> axes{ax_a[0], ax_a[1], ax_b[0], ax_b[1]};
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec2& u : axes) {
        const double ext_a = 0.5 * a.length * std::abs(u.dot(ax_a[0])) +
                             0.5 * a.width * std::abs(u.dot(ax_a[1]));
        const double ext_b = 0.5 * b.length * std::abs(u.dot(ax_b[0])) +
                             0.5 * b.width * std::abs(u.dot(ax_b[1]));
        const double gap = std::abs(u.dot(delta)) - (ext_a + ext_b);
        best = std::max(best, gap);
    }
    return best;
}

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
    return box_separation(a, b) <= 0.0;
}

double heading_at(const Trajectory& traj, int k) {
    const int n = traj.length();
    check_arg(n >= 2, "heading_at: degenerate trajectory (need >= 2 waypoints)");
    check_arg(k >= 0 && k < n, "heading_at: index out of range");

    constexpr double kMinSegment = 1e-12;
    const auto segment_heading = [&](int i) -> double {
        // heading of segment i -> i+1, or NaN when degenerate
        const Vec2 d = traj.waypoints[i + 1].pos() - traj.waypoints[i].pos();
        if (d.norm() < kMinSegment) return std::numeric_limits<double>::quiet_NaN();
        return std::atan2(d.y, d.x);
    };

    int seg = std::min(k, n - 2);
    for (int i = seg; i >= 0; --i) {
        double h = segment_heading(i);
        if (!std::isnan(h)) return h;
    }
    for (int i = seg + 1; i < n - 1; ++i) {
        double h = segment_heading(i);
        if (!std::isnan(h)) return h;
    }
    return 0.0;  // fully stationary
}

double polyline_length(std::span<const Vec2> points) {
    double total = 0.0;
    for (size_t i = 0; i + 1 < points.size(); ++i) {
        total += (points[i + 1] - points[i]).norm();
    }
    return total;
}

std::vector<Vec2> resample_polyline(std::span<const Vec2> points, int n) {
    check_arg(points.size() >= 2, "resample_polyline: need >= 2 points");
    check_arg(n >= 2, "resample_polyline: need n >= 2");
    const double total = polyline_length(points);
    std::vector<Vec2> out;
    out.reserve(static_cast<size_t>(n));
    size_t seg = 0;
    double seg_start = 0.0;
    double seg_len = (points[1] - points[0]).norm();
    for (int i = 0; i < n; ++i) {
        const double target = total * static_cast<double>(i) / static_cast<double>(n - 1);
        while (seg + 2 < points.size() && seg_start + seg_len < target) {
            seg_start += seg_len;
            ++seg;
            seg_len = (points[seg + 1] - points[seg]).norm();
        }
        const double t = seg_len > 0.0 ? std::clamp((target - seg_start) / seg_len, 0.0, 1.0) : 0.0;
        out.push_back(points[seg] + (points[seg + 1] - points[seg]) * t);
    }
    return out;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    if (len2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

double signed_lateral_offset(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len = ab.norm();
    if (len == 0.0) return 0.0;
    return ab.cross(p - a) / len;
}

NearestSegment nearest_segment(const Vec2& p, std::span<const Polyline> map,
                               MapCategory category) {
    NearestSegment best;
    best.distance = std::numeric_limits<double>::infinity();
    for (size_t pi = 0; pi < map.size(); ++pi) {
        if (map[pi].category != category) continue;
        const auto& pts = map[pi].points;
        for (size_t si = 0; si + 1 < pts.size(); ++si) {
            const double d = point_segment_distance(p, pts[si], pts[si + 1]);
            if (d < best.distance) {
                best.distance = d;
                best.polyline_index = static_cast<int>(pi);
                best.segment_index = static_cast<int>(si);
            }
        }
    }
    return best;
}

std::vector<Polyline> clip_polyline_axis_box(const Polyline& line, double half) {
    check_arg(half > 0.0, "clip box must have positive size");
    std::vector<Polyline> pieces;
    Polyline current;
    current.category = line.category;
    const auto flush = [&] {
        if (current.points.size() >= 2) pieces.push_back(current);
        current.points.clear();
    };
    const auto append = [&](const Vec2& p) {
        if (!current.points.empty()) {
            const Vec2 d = p - current.points.back();
            if (std::abs(d.x) < 1e-12 && std::abs(d.y) < 1e-12) return;
        }
        current.points.push_back(p);
    };
    for (size_t i = 0; i + 1 < line.points.size(); ++i) {
        const Vec2 a = line.points[i];
        const Vec2 b = line.points[i + 1];
        // Liang-Barsky interval of the segment against the square.
        const double dx = b.x - a.x, dy = b.y - a.y;
        double t0 = 0.0, t1 = 1.0;
        bool reject = false;
        const double p[4] = {-dx, dx, -dy, dy};
        const double q[4] = {a.x + half, half - a.x, a.y + half, half - a.y};
        for (int e = 0; e < 4 && !reject; ++e) {
            if (p[e] == 0.0) {
                if (q[e] < 0.0) reject = true;
            } else {
                const double r = q[e] / p[e];
                if (p[e] < 0.0) {
                    t0 = std::max(t0, r);
                } else {
                    t1 = std::min(t1, r);
                }
            }
        }
        if (reject || t0 > t1) {
            flush();
            continue;
        }
        const Vec2 pa{a.x + t0 * dx, a.y + t0 * dy};
        const Vec2 pb{a.x + t1 * dx, a.y + t1 * dy};
        // A segment entering the box from outside starts a fresh piece.
        if (t0 > 0.0 && !current.points.empty() &&
            (std::abs(pa.x - current.points.back().x) > 1e-12 ||
             std::abs(pa.y - current.points.back().y) > 1e-12)) {
            flush();
        }
        append(pa);
        append(pb);
        if (t1 < 1.0) flush();
    }
    flush();
    return pieces;
}

}  // namespace drivegen::geom
