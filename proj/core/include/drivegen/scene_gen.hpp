#pragma once

#include <cstdint>

#include "drivegen/rng.hpp"
#include "drivegen/scene.hpp"

namespace drivegen::scene {

/// Procedural one-way multi-lane corridor scenes along +x. All sampled
/// quantities come from a single seeded stream, so (config, seed) fully
/// determines the scene.
struct SceneGenConfig {
    int lanes = 4;
    double lane_width = 3.5;
    double map_length = 120.0;  ///< corridor x extent, centered on 0

    int min_agents = 2;
    int max_agents = 12;
    double min_speed = 2.0;   ///< m/s
    double max_speed = 15.0;  ///< m/s
    double max_curvature = 0.1;  ///< 1/m, |kappa| bound for arc behaviors

    double p_straight = 0.6;
    double p_arc = 0.3;
    double p_lane_change = 0.1;

    double crossing_prob = 0.3;  ///< chance of a pedestrian-crossing polyline

    double agent_length = 4.6;
    double agent_width = 1.9;
    double spawn_margin = 0.3;  ///< required clearance between any two boxes, all frames
    int max_spawn_retries = 100;
};

/// Throws InputError for out-of-range configs and StateError when rejection
/// sampling cannot place min_agents collision-free agents.
Scene generate_scene(const SceneGenConfig& cfg, uint64_t seed, uint64_t scene_id);

/// Batch convenience: scene i uses the child seed mix(seed, i) and gets the
/// id first_id + i.
std::vector<Scene> generate_dataset(const SceneGenConfig& cfg, uint64_t seed, uint64_t first_id,
                                    int count);

// Track builders (exposed for direct testing). `start` is the frame-0
// position; every builder emits the full window -kPastFrames..kFutureFrames
// at constant speed.

/// Constant-velocity track: position k is start + k * speed * kFramePeriod
/// along the heading.
geom::Trajectory make_straight_track(const geom::Vec2& start, double heading, double speed);

/// Constant-curvature track; heading advances by curvature * speed *
/// kFramePeriod per frame.
geom::Trajectory make_arc_track(const geom::Vec2& start, double heading, double speed,
                                double curvature);

/// Straight longitudinal motion plus a smooth lateral shift (quintic blend)
/// that starts at frame 0 and completes at the final frame.
geom::Trajectory make_lane_change_track(const geom::Vec2& start, double heading, double speed,
                                        double lateral_shift);

/// Lane center offsets from the corridor axis, lowest first.
std::vector<double> lane_centers(const SceneGenConfig& cfg);

}  // namespace drivegen::scene
