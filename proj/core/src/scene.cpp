#include "drivegen/scene.hpp"

#include <string>

#include "drivegen/check.hpp"

namespace drivegen::scene {

using geom::kFutureFrames;
using geom::kPastFrames;

geom::Pose2 pose_at(const geom::Trajectory& track, int t) {
    const int k = track_index(t);
    check_arg(k >= 0 && k < track.length(), "pose_at: frame " + std::to_string(t) +
              " outside track window");
    const geom::Waypoint& w = track.waypoints[k];
    return {w.x, w.y, geom::heading_at(track, k)};
}

geom::OrientedBox ego_box_at(const Scene& s, int t) {
    return {pose_at(s.ego.track, t), s.ego.length, s.ego.width};
}

geom::OrientedBox agent_box_at(const AgentRecord& a, int t) {
    return {pose_at(a.track, t), a.length, a.width};
}

geom::Trajectory past_of(const geom::Trajectory& track) {
    validate_track(track, "past_of");
    geom::Trajectory out;
    out.frame = track.frame;
    out.waypoints.assign(track.waypoints.begin(), track.waypoints.begin() + kPastFrames + 1);
    return out;
}

geom::Trajectory future_of(const geom::Trajectory& track) {
    validate_track(track, "future_of");
    geom::Trajectory out;
    out.frame = track.frame;
    out.waypoints.assign(track.waypoints.begin() + kPastFrames + 1, track.waypoints.end());
    return out;
}

void validate_track(const geom::Trajectory& track, const char* what) {
    const int expected = kPastFrames + 1 + kFutureFrames;
    check_arg(track.length() == expected,
              std::string(what) + ": track has " + std::to_string(track.length()) +
                  " waypoints, expected " + std::to_string(expected));
    for (int k = 0; k < expected; ++k) {
        check_arg(track.waypoints[k].t_index == k - kPastFrames,
                  std::string(what) + ": waypoint " + std::to_string(k) +
                      " has frame index " + std::to_string(track.waypoints[k].t_index) +
                      ", expected " + std::to_string(k - kPastFrames));
    }
}

}  // namespace drivegen::scene
