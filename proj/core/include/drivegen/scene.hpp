#pragma once

#include <cstdint>
#include <vector>

#include "drivegen/geom.hpp"

namespace drivegen::scene {

enum class AgentClass { kVehicle };

/// One non-ego traffic participant. The track covers every keyframe of the
/// scene window: frames -kPastFrames..kFutureFrames in scene-global
/// coordinates, so waypoint index k corresponds to frame k - kPastFrames.
struct AgentRecord {
    int id = 0;
    AgentClass cls = AgentClass::kVehicle;
    double length = 4.6;
    double width = 1.9;
    geom::Trajectory track;

    bool operator==(const AgentRecord&) const = default;
};

struct EgoRecord {
    double length = 4.6;
    double width = 1.9;
    geom::Trajectory track;  ///< same window as AgentRecord::track

    bool operator==(const EgoRecord&) const = default;
};

/// A complete driving snippet: static map, ego window, surrounding agents.
/// Agents are ordered by distance to the ego at frame 0 (closest first).
struct Scene {
    uint64_t id = 0;
    std::vector<geom::Polyline> map;
    EgoRecord ego;
    std::vector<AgentRecord> agents;

    bool operator==(const Scene&) const = default;
};

/// Waypoint index of frame t (t in -kPastFrames..kFutureFrames).
inline int track_index(int t) { return t + geom::kPastFrames; }

/// Pose (position + motion heading) of a track at frame t.
geom::Pose2 pose_at(const geom::Trajectory& track, int t);

geom::OrientedBox ego_box_at(const Scene& s, int t);
geom::OrientedBox agent_box_at(const AgentRecord& a, int t);

/// Frames -kPastFrames..0 (resp. 1..kFutureFrames) of a full-window track.
geom::Trajectory past_of(const geom::Trajectory& track);
geom::Trajectory future_of(const geom::Trajectory& track);

/// Throws InputError unless the track covers exactly the scene window with
/// consecutive frame indices.
void validate_track(const geom::Trajectory& track, const char* what);

}  // namespace drivegen::scene
