#include "drivegen/dataset.hpp"

#include <fstream>

#include "json.hpp"

#include "drivegen/check.hpp"

namespace drivegen::scene {

using nlohmann::json;

namespace {

const char* category_name(geom::MapCategory c) {
    switch (c) {
        case geom::MapCategory::kLaneDivider: return "lane_divider";
        case geom::MapCategory::kRoadBoundary: return "road_boundary";
        case geom::MapCategory::kPedestrianCrossing: return "pedestrian_crossing";
    }
    return "unknown";
}

geom::MapCategory category_from(const std::string& name) {
    if (name == "lane_divider") return geom::MapCategory::kLaneDivider;
    if (name == "road_boundary") return geom::MapCategory::kRoadBoundary;
    if (name == "pedestrian_crossing") return geom::MapCategory::kPedestrianCrossing;
    throw InputError("unknown map category \"" + name + "\"");
}

json track_to_json(const geom::Trajectory& t) {
    json arr = json::array();
    for (const geom::Waypoint& w : t.waypoints) arr.push_back({w.t_index, w.x, w.y});
    return arr;
}

geom::Trajectory track_from_json(const json& arr, const char* what) {
    geom::Trajectory t;
    t.frame = geom::Frame::kSceneGlobal;
    check_arg(arr.is_array(), std::string(what) + ": track must be an array");
    for (const json& e : arr) {
        check_arg(e.is_array() && e.size() == 3,
                  std::string(what) + ": waypoint must be [t, x, y]");
        t.waypoints.push_back({e[1].get<double>(), e[2].get<double>(), e[0].get<int>()});
    }
    validate_track(t, what);
    return t;
}

}  // namespace

std::string scene_to_json(const Scene& s) {
    json j;
    j["v"] = 1;
    j["id"] = s.id;

    json map = json::array();
    for (const geom::Polyline& line : s.map) {
        json pts = json::array();
        for (const geom::Vec2& p : line.points) pts.push_back({p.x, p.y});
        map.push_back({{"category", category_name(line.category)}, {"points", std::move(pts)}});
    }
    j["map"] = std::move(map);

    j["ego"] = {{"length", s.ego.length},
                {"width", s.ego.width},
                {"track", track_to_json(s.ego.track)}};

    json agents = json::array();
    for (const AgentRecord& a : s.agents) {
        agents.push_back({{"id", a.id},
                          {"class", "vehicle"},
                          {"length", a.length},
                          {"width", a.width},
                          {"track", track_to_json(a.track)}});
    }
    j["agents"] = std::move(agents);
    return j.dump();
}

Scene scene_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("invalid JSON: ") + e.what());
    }
    try {
        check_arg(j.value("v", -1) == 1, "unsupported schema version (want \"v\": 1)");

        Scene s;
        s.id = j.value("id", 0ULL);
        for (const json& line : j.at("map")) {
            geom::Polyline p;
            p.category = category_from(line.at("category").get<std::string>());
            for (const json& pt : line.at("points")) {
                check_arg(pt.is_array() && pt.size() == 2, "map point must be [x, y]");
                p.points.push_back({pt[0].get<double>(), pt[1].get<double>()});
            }
            check_arg(p.points.size() >= 2, "map polyline needs at least 2 points");
            s.map.push_back(std::move(p));
        }

        const json& ego = j.at("ego");
        s.ego.length = ego.at("length").get<double>();
        s.ego.width = ego.at("width").get<double>();
        s.ego.track = track_from_json(ego.at("track"), "ego");
        check_arg(s.ego.length > 0 && s.ego.width > 0, "ego extents must be positive");

        for (const json& ja : j.at("agents")) {
            AgentRecord a;
            a.id = ja.at("id").get<int>();
            const std::string cls = ja.at("class").get<std::string>();
            check_arg(cls == "vehicle", "unknown agent class \"" + cls + "\"");
            a.cls = AgentClass::kVehicle;
            a.length = ja.at("length").get<double>();
            a.width = ja.at("width").get<double>();
            check_arg(a.length > 0 && a.width > 0, "agent extents must be positive");
            a.track = track_from_json(ja.at("track"), "agent");
            s.agents.push_back(std::move(a));
        }
        return s;
    } catch (const json::exception& e) {
        throw InputError(std::string("schema violation: ") + e.what());
    }
}

void write_scenes_jsonl(const std::string& path, std::span<const Scene> scenes) {
    std::ofstream out(path);
    check_state(out.good(), "write_scenes_jsonl: cannot open \"" + path + "\"");
    for (const Scene& s : scenes) out << scene_to_json(s) << "\n";
    check_state(out.good(), "write_scenes_jsonl: write to \"" + path + "\" failed");
}

std::vector<Scene> read_scenes_jsonl(const std::string& path) {
    std::ifstream in(path);
    check_arg(in.good(), "read_scenes_jsonl: cannot open \"" + path + "\"");
    std::vector<Scene> scenes;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            scenes.push_back(scene_from_json(line));
        } catch (const InputError& e) {
            throw InputError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return scenes;
}

}  // namespace drivegen::scene
