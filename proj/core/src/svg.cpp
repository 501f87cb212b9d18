#include "drivegen/svg.hpp"

#include <cstdio>
#include <span>
#include <sstream>

#include "drivegen/check.hpp"

namespace drivegen::viz {
namespace {

using geom::Vec2;

struct Mapper {
    Vec2 center;
    double scale;  // pixels per meter
    double half;   // pixels/2
    Vec2 px(const Vec2& p) const {
        return {(p.x - center.x) * scale + half, half - (p.y - center.y) * scale};
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string points_attr(const Mapper& m, std::span<const Vec2> pts) {
    std::string out;
    for (const Vec2& p : pts) {
        const Vec2 q = m.px(p);
        if (!out.empty()) out += ' ';
        out += fmt(q.x) + ',' + fmt(q.y);
    }
    return out;
}

void polyline(std::ostringstream& svg, const Mapper& m, std::span<const Vec2> pts,
              const char* style) {
    svg << "<polyline fill=\"none\" points=\"" << points_attr(m, pts) << "\" " << style
        << "/>\n";
}

void box(std::ostringstream& svg, const Mapper& m, const geom::OrientedBox& b,
         const char* style) {
    const auto corners = geom::box_corners(b);
    svg << "<polygon points=\"" << points_attr(m, corners) << "\" " << style << "/>\n";
}

void dot(std::ostringstream& svg, const Mapper& m, const Vec2& p, double r, const char* fill) {
    const Vec2 q = m.px(p);
    svg << "<circle cx=\"" << fmt(q.x) << "\" cy=\"" << fmt(q.y) << "\" r=\"" << fmt(r)
        << "\" fill=\"" << fill << "\"/>\n";
}

const char* map_style(geom::MapCategory c) {
    switch (c) {
        case geom::MapCategory::kLaneDivider:
            return "stroke=\"#9aa0a6\" stroke-width=\"1.5\" stroke-dasharray=\"8 6\"";
        case geom::MapCategory::kRoadBoundary:
            return "stroke=\"#202124\" stroke-width=\"2.5\"";
        case geom::MapCategory::kPedestrianCrossing:
            return "stroke=\"#e8710a\" stroke-width=\"2\"";
    }
    return "";
}

std::vector<Vec2> future_scene_frame(const geom::Trajectory& track) {
    std::vector<Vec2> pts;
    pts.reserve(geom::kFutureFrames + 1);
    for (int t = 0; t <= geom::kFutureFrames; ++t) {
        pts.push_back(track.waypoints[scene::track_index(t)].pos());
    }
    return pts;
}

}  // namespace

std::string render_svg(const scene::Scene& s, const model::InferenceResult* inference,
                       const SvgOptions& opt) {
    check_arg(opt.extent > 0.0 && opt.pixels > 0, "render_svg: bad viewport");
    const Vec2 center = s.ego.track.waypoints[scene::track_index(0)].pos();
    const Mapper m{center, opt.pixels / opt.extent, opt.pixels / 2.0};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.pixels << "\" height=\""
        << opt.pixels << "\" viewBox=\"0 0 " << opt.pixels << ' ' << opt.pixels << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"#f8f9fa\"/>\n";

    for (const geom::Polyline& line : s.map) {
        polyline(svg, m, line.points, map_style(line.category));
    }

    if (opt.gt_futures) {
        for (const scene::AgentRecord& a : s.agents) {
            polyline(svg, m, future_scene_frame(a.track),
                     "stroke=\"#188038\" stroke-width=\"1.5\"");
        }
        polyline(svg, m, future_scene_frame(s.ego.track),
                 "stroke=\"#188038\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\"");
    }
    for (const scene::AgentRecord& a : s.agents) {
        box(svg, m, scene::agent_box_at(a, 0),
            "fill=\"#dadce0\" stroke=\"#5f6368\" stroke-width=\"1\"");
    }
    box(svg, m, scene::ego_box_at(s, 0),
        "fill=\"#aecbfa\" stroke=\"#1a73e8\" stroke-width=\"1.5\"");

    if (inference) {
        const geom::Pose2& origin = inference->model_origin;
        for (const model::AgentPrediction& pred : inference->predictions) {
            std::vector<Vec2> pts;
            pts.reserve(pred.waypoints.size() + 1);
            pts.push_back(geom::se2_apply(origin, geom::Vec2{pred.detection.pose.x,
                                                            pred.detection.pose.y}));
            for (const Vec2& w : pred.waypoints) pts.push_back(geom::se2_apply(origin, w));
            polyline(svg, m, pts, "stroke=\"#d93025\" stroke-width=\"1.5\"");
            dot(svg, m, pts.front(), 3.0, "#d93025");
        }
        std::vector<Vec2> plan;
        plan.reserve(inference->plan.size() + 1);
        plan.push_back({origin.x, origin.y});
        for (const Vec2& w : inference->plan) plan.push_back(geom::se2_apply(origin, w));
        polyline(svg, m, plan, "stroke=\"#1a73e8\" stroke-width=\"3\"");
        for (const Vec2& w : plan) dot(svg, m, w, 2.0, "#1a73e8");
    }

    svg << "</svg>\n";
    return svg.str();
}

}  // namespace drivegen::viz
