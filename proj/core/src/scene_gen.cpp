#include "drivegen/scene_gen.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "drivegen/check.hpp"

namespace drivegen::scene {

using geom::kFramePeriod;
using geom::kFutureFrames;
using geom::kPastFrames;
using geom::Polyline;
using geom::Trajectory;
using geom::Vec2;
using geom::Waypoint;

namespace {

Trajectory window_track(const std::function<Vec2(int)>& pos) {
    Trajectory t;
    t.frame = geom::Frame::kSceneGlobal;
    t.waypoints.reserve(kPastFrames + 1 + kFutureFrames);
    for (int k = -kPastFrames; k <= kFutureFrames; ++k) {
        const Vec2 p = pos(k);
        t.waypoints.push_back({p.x, p.y, k});
    }
    return t;
}

/// Quintic smoothstep: 0 at 0, 1 at 1, zero first and second derivative at
/// both ends, so lane changes keep continuous curvature.
double quintic_blend(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }

enum class Behavior { kStraight, kArc, kLaneChange };

Behavior pick_behavior(const SceneGenConfig& cfg, RngStream& rng) {
    const double total = cfg.p_straight + cfg.p_arc + cfg.p_lane_change;
    const double r = rng.uniform() * total;
    if (r < cfg.p_straight) return Behavior::kStraight;
    if (r < cfg.p_straight + cfg.p_arc) return Behavior::kArc;
    return Behavior::kLaneChange;
}

struct CorridorShape {
    double half_len;
    double half_width;
};

/// Curvature bound that keeps an arc from `lane_y` inside the corridor over
/// the scene window: lateral drift of a constant arc is at most
/// kappa * (v T)^2 / 2 toward either side.
double arc_cap(const SceneGenConfig& cfg, const CorridorShape& shape, double lane_y, double speed,
               double body_width) {
    const double horizon = std::max(kPastFrames, kFutureFrames) * kFramePeriod;
    const double lat_margin =
        shape.half_width - std::abs(lane_y) - body_width / 2 - 0.2;
    if (lat_margin <= 0.0) return 0.0;
    const double vt = speed * horizon;
    return std::min(cfg.max_curvature, 2.0 * lat_margin / (vt * vt));
}

Trajectory sample_track(const SceneGenConfig& cfg, const CorridorShape& shape,
                        const std::vector<double>& centers, int lane, double speed, double x0,
                        double body_width, RngStream& rng) {
    const Vec2 start{x0, centers[lane]};
    switch (pick_behavior(cfg, rng)) {
        case Behavior::kStraight:
            return make_straight_track(start, 0.0, speed);
        case Behavior::kArc: {
            const double cap = arc_cap(cfg, shape, centers[lane], speed, body_width);
            const double kappa = rng.uniform(-cap, cap);
            return make_arc_track(start, 0.0, speed, kappa);
        }
        case Behavior::kLaneChange: {
            int dir;
            if (lane == 0) {
                dir = 1;
            } else if (lane == static_cast<int>(centers.size()) - 1) {
                dir = -1;
            } else {
                dir = rng.uniform() < 0.5 ? -1 : 1;
            }
            return make_lane_change_track(start, 0.0, speed,
                                          centers[lane + dir] - centers[lane]);
        }
    }
    return make_straight_track(start, 0.0, speed);  // unreachable
}

bool inside_corridor(const Trajectory& t, const CorridorShape& shape, double length,
                     double width) {
    for (const Waypoint& w : t.waypoints) {
        if (std::abs(w.y) > shape.half_width - width / 2) return false;
        if (std::abs(w.x) > shape.half_len - length / 2) return false;
    }
    return true;
}

/// Minimum pairwise box separation over every frame of the window.
double min_clearance(const Trajectory& a, double alen, double awid, const Trajectory& b,
                     double blen, double bwid) {
    double lo = std::numeric_limits<double>::infinity();
    for (int t = -kPastFrames; t <= kFutureFrames; ++t) {
        const geom::OrientedBox ba{pose_at(a, t), alen, awid};
        const geom::OrientedBox bb{pose_at(b, t), blen, bwid};
        lo = std::min(lo, geom::box_separation(ba, bb));
    }
    return lo;
}

void validate_config(const SceneGenConfig& cfg) {
    check_arg(cfg.lanes >= 2, "scene config: need at least 2 lanes");
    check_arg(cfg.lane_width > 2.0, "scene config: lane_width too small");
    check_arg(cfg.map_length >= 40.0, "scene config: map_length must be >= 40");
    check_arg(cfg.min_agents >= 1 && cfg.min_agents <= cfg.max_agents,
              "scene config: agent count range is invalid");
    check_arg(cfg.min_speed > 0.0 && cfg.min_speed <= cfg.max_speed,
              "scene config: speed range is invalid");
    check_arg(cfg.max_curvature >= 0.0, "scene config: max_curvature must be >= 0");
    check_arg(cfg.p_straight >= 0.0 && cfg.p_arc >= 0.0 && cfg.p_lane_change >= 0.0 &&
                  cfg.p_straight + cfg.p_arc + cfg.p_lane_change > 0.0,
              "scene config: behavior probabilities are invalid");
    check_arg(cfg.crossing_prob >= 0.0 && cfg.crossing_prob <= 1.0,
              "scene config: crossing_prob must be in [0, 1]");
    check_arg(cfg.spawn_margin >= 0.0, "scene config: spawn_margin must be >= 0");
}

}  // namespace

Trajectory make_straight_track(const Vec2& start, double heading, double speed) {
    const Vec2 dir{std::cos(heading), std::sin(heading)};
    return window_track([&](int k) {
        const double s = speed * kFramePeriod * k;
        return Vec2{start.x + dir.x * s, start.y + dir.y * s};
    });
}

Trajectory make_arc_track(const Vec2& start, double heading, double speed, double curvature) {
    if (std::abs(curvature) < 1e-9) return make_straight_track(start, heading, speed);
    const double radius = 1.0 / curvature;
    const Vec2 center{start.x - radius * std::sin(heading), start.y + radius * std::cos(heading)};
    return window_track([&](int k) {
        const double phi = heading + curvature * speed * kFramePeriod * k;
        return Vec2{center.x + radius * std::sin(phi), center.y - radius * std::cos(phi)};
    });
}

Trajectory make_lane_change_track(const Vec2& start, double heading, double speed,
                                  double lateral_shift) {
    const double span = speed * kFramePeriod * kFutureFrames;
    const double ch = std::cos(heading), sh = std::sin(heading);
    return window_track([&](int k) {
        const double s = speed * kFramePeriod * k;
        const double u = std::clamp(s / span, 0.0, 1.0);
        const double lat = lateral_shift * quintic_blend(u);
        return Vec2{start.x + ch * s - sh * lat, start.y + sh * s + ch * lat};
    });
}

std::vector<double> lane_centers(const SceneGenConfig& cfg) {
    std::vector<double> centers(cfg.lanes);
    for (int i = 0; i < cfg.lanes; ++i)
        centers[i] = (i - (cfg.lanes - 1) / 2.0) * cfg.lane_width;
    return centers;
}

Scene generate_scene(const SceneGenConfig& cfg, uint64_t seed, uint64_t scene_id) {
    validate_config(cfg);
    RngStream rng(seed);
    const CorridorShape shape{cfg.map_length / 2, cfg.lanes * cfg.lane_width / 2};
    const std::vector<double> centers = lane_centers(cfg);

    Scene s;
    s.id = scene_id;

    // --- map ---
    const int n_samples = std::max(2, static_cast<int>(cfg.map_length / 10.0) + 1);
    auto sampled_line = [&](Vec2 a, Vec2 b, geom::MapCategory cat) {
        Polyline p;
        p.category = cat;
        for (int i = 0; i < n_samples; ++i) {
            const double u = static_cast<double>(i) / (n_samples - 1);
            p.points.push_back({a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u});
        }
        return p;
    };
    for (int i = 1; i < cfg.lanes; ++i) {
        const double y = (i - cfg.lanes / 2.0) * cfg.lane_width;
        s.map.push_back(sampled_line({-shape.half_len, y}, {shape.half_len, y},
                                     geom::MapCategory::kLaneDivider));
    }
    // boundaries keep the drivable side on their left
    s.map.push_back(sampled_line({-shape.half_len, -shape.half_width},
                                 {shape.half_len, -shape.half_width},
                                 geom::MapCategory::kRoadBoundary));
    s.map.push_back(sampled_line({shape.half_len, shape.half_width},
                                 {-shape.half_len, shape.half_width},
                                 geom::MapCategory::kRoadBoundary));
    if (rng.uniform() < cfg.crossing_prob) {
        const double cx = rng.uniform(-shape.half_len * 0.5, shape.half_len * 0.5);
        Polyline crossing;
        crossing.category = geom::MapCategory::kPedestrianCrossing;
        const int cn = 8;
        for (int i = 0; i < cn; ++i) {
            const double u = static_cast<double>(i) / (cn - 1);
            crossing.points.push_back({cx, -shape.half_width + 2 * shape.half_width * u});
        }
        s.map.push_back(crossing);
    }

    // --- ego ---
    {
        const int lane = static_cast<int>(rng.uniform_int(0, cfg.lanes - 1));
        const double speed = rng.uniform(cfg.min_speed, cfg.max_speed);
        const double x0 = rng.uniform(-8.0, 8.0);
        Trajectory track =
            sample_track(cfg, shape, centers, lane, speed, x0, cfg.agent_width, rng);
        if (!inside_corridor(track, shape, cfg.agent_length, cfg.agent_width)) {
            track = make_straight_track({x0, centers[lane]}, 0.0, speed);
        }
        s.ego.length = cfg.agent_length;
        s.ego.width = cfg.agent_width;
        s.ego.track = std::move(track);
    }

    // --- agents: rejection sampling against ego and accepted agents ---
    const int target = static_cast<int>(rng.uniform_int(cfg.min_agents, cfg.max_agents));
    for (int i = 0; i < target; ++i) {
        for (int attempt = 0; attempt < cfg.max_spawn_retries; ++attempt) {
            const int lane = static_cast<int>(rng.uniform_int(0, cfg.lanes - 1));
            const double speed = rng.uniform(cfg.min_speed, cfg.max_speed);
            const double x_lo =
                -shape.half_len + kPastFrames * speed * kFramePeriod + cfg.agent_length;
            const double x_hi =
                shape.half_len - kFutureFrames * speed * kFramePeriod - cfg.agent_length;
            if (x_lo >= x_hi) continue;
            const double x0 = rng.uniform(x_lo, x_hi);
            const Trajectory track =
                sample_track(cfg, shape, centers, lane, speed, x0, cfg.agent_width, rng);
            if (!inside_corridor(track, shape, cfg.agent_length, cfg.agent_width)) continue;

            double clearance = min_clearance(track, cfg.agent_length, cfg.agent_width,
                                             s.ego.track, s.ego.length, s.ego.width);
            for (const AgentRecord& other : s.agents) {
                if (clearance < cfg.spawn_margin) break;
                clearance = std::min(clearance,
                                     min_clearance(track, cfg.agent_length, cfg.agent_width,
                                                   other.track, other.length, other.width));
            }
            if (clearance < cfg.spawn_margin) continue;

            AgentRecord a;
            a.id = i;
            a.cls = AgentClass::kVehicle;
            a.length = cfg.agent_length;
            a.width = cfg.agent_width;
            a.track = track;
            s.agents.push_back(std::move(a));
            break;
        }
    }
    check_state(static_cast<int>(s.agents.size()) >= cfg.min_agents,
                "generate_scene: placed " + std::to_string(s.agents.size()) + " of " +
                    std::to_string(cfg.min_agents) + " required agents (seed " +
                    std::to_string(seed) + ")");

    // closest-first ordering relative to the ego at frame 0
    const Vec2 ego0 = s.ego.track.waypoints[track_index(0)].pos();
    std::stable_sort(s.agents.begin(), s.agents.end(),
                     [&](const AgentRecord& a, const AgentRecord& b) {
                         const double da = (a.track.waypoints[track_index(0)].pos() - ego0).norm();
                         const double db = (b.track.waypoints[track_index(0)].pos() - ego0).norm();
                         return da < db;
                     });
    return s;
}

std::vector<Scene> generate_dataset(const SceneGenConfig& cfg, uint64_t seed, uint64_t first_id,
                                    int count) {
    check_arg(count >= 0, "generate_dataset: negative count");
    std::vector<Scene> scenes;
    scenes.reserve(count);
    for (int i = 0; i < count; ++i) {
        scenes.push_back(generate_scene(cfg, RngStream::mix(seed, i), first_id + i));
    }
    return scenes;
}

}  // namespace drivegen::scene
