#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace drivegen::geom {

/// Keyframe period: 2 Hz keyframes, 0.5 s per frame.
inline constexpr double kFramePeriod = 0.5;
/// Past horizon p (frames -p..0 observed) and future horizon f (frames 1..f).
inline constexpr int kPastFrames = 5;
inline constexpr int kFutureFrames = 6;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2&) const = default;

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
};

struct Waypoint {
    double x = 0.0;
    double y = 0.0;
    int t_index = 0;  ///< frame index; negative = past, 0 = current, positive = future

    Vec2 pos() const { return {x, y}; }
    bool operator==(const Waypoint&) const = default;
};

enum class Frame { kSceneGlobal, kEgoCentric };

/// Ordered waypoint sequence with strictly increasing frame indices.
struct Trajectory {
    std::vector<Waypoint> waypoints;
    Frame frame = Frame::kSceneGlobal;

    int length() const { return static_cast<int>(waypoints.size()); }
    bool operator==(const Trajectory&) const = default;
};

/// Wraps an angle into (-pi, pi].
double normalize_heading(double h);

struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;  ///< radians in (-pi, pi]

    bool operator==(const Pose2&) const = default;
};

struct OrientedBox {
    Pose2 center;
    double length = 0.0;  ///< extent along the heading axis
    double width = 0.0;

    bool operator==(const OrientedBox&) const = default;
};

enum class MapCategory { kLaneDivider, kRoadBoundary, kPedestrianCrossing };

struct Polyline {
    std::vector<Vec2> points;  ///< >= 2 points, consecutive points distinct
    MapCategory category = MapCategory::kLaneDivider;

    bool operator==(const Polyline&) const = default;
};

Vec2 se2_apply(const Pose2& pose, const Vec2& p);
std::vector<Vec2> se2_apply(const Pose2& pose, std::span<const Vec2> pts);
Trajectory se2_apply(const Pose2& pose, const Trajectory& traj, Frame result_frame);
Pose2 se2_invert(const Pose2& pose);
/// Composition: se2_apply(se2_compose(a, b), p) == se2_apply(a, se2_apply(b, p)).
Pose2 se2_compose(const Pose2& a, const Pose2& b);

std::array<Vec2, 4> box_corners(const OrientedBox& box);

/// Signed separation between two oriented boxes from the separating-axis
/// test over the 4 face normals. Positive iff the boxes are disjoint;
/// when they overlap it equals minus the minimum penetration depth.
/// For disjoint boxes this is a lower bound on the true clearance
/// (tight except in corner-versus-corner configurations).
double box_separation(const OrientedBox& a, const OrientedBox& b);

/// True iff interiors or boundaries intersect (contact counts as overlap).
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

/// Heading of the trajectory at waypoint position k (0-based): direction of
/// the segment k -> k+1, with the last waypoint reusing the final segment.
/// Zero-length segments fall back to the nearest preceding (then following)
/// segment with nonzero length; a fully stationary trajectory yields 0.
/// Throws InputError for trajectories with fewer than 2 waypoints.
double heading_at(const Trajectory& traj, int k);

double polyline_length(std::span<const Vec2> points);
/// Arc-length uniform resampling to exactly n points (endpoints preserved).
std::vector<Vec2> resample_polyline(std::span<const Vec2> points, int n);

/// Distance from a point to a segment, plus the signed lateral offset of the
/// point relative to the segment direction (positive = left of a->b).
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);
double signed_lateral_offset(const Vec2& p, const Vec2& a, const Vec2& b);

struct NearestSegment {
    int polyline_index = -1;
    int segment_index = -1;
    double distance = 0.0;
};
/// Nearest segment to p over all polylines of the given category.
/// polyline_index stays -1 when no such polyline exists.
NearestSegment nearest_segment(const Vec2& p, std::span<const Polyline> map,
                               MapCategory category);

/// Pieces of the polyline inside the axis-aligned square [-half, half]^2,
/// with intersection points inserted where segments cross the border.
/// Pieces keep the source category; pieces shorter than two points are
/// dropped.
std::vector<Polyline> clip_polyline_axis_box(const Polyline& line, double half);

}  // namespace drivegen::geom
