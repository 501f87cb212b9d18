#include <string>

#include "doctest.h"

#include "drivegen/check.hpp"
#include "drivegen/scene_gen.hpp"
#include "drivegen/svg.hpp"

using namespace drivegen;

namespace {

size_t count_of(const std::string& hay, const std::string& needle) {
    size_t n = 0;
    for (size_t pos = hay.find(needle); pos != std::string::npos;
         pos = hay.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("scene plots are well-formed and deterministic") {
    const scene::Scene s = scene::generate_scene({}, 42, 0);
    const std::string svg = viz::render_svg(s, nullptr);
    CHECK(svg.rfind("<svg ", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    // One filled polygon per agent box plus the ego box.
    CHECK(count_of(svg, "<polygon") == s.agents.size() + 1);
    // Futures: one polyline per agent, one for the ego, plus the map lines.
    CHECK(count_of(svg, "<polyline") == s.map.size() + s.agents.size() + 1);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);  // lane dividers / ego future
    CHECK(svg == viz::render_svg(s, nullptr));

    viz::SvgOptions no_futures;
    no_futures.gt_futures = false;
    CHECK(count_of(viz::render_svg(s, nullptr, no_futures), "<polyline") == s.map.size());
}

TEST_CASE("inference overlays add the plan and predictions") {
    const scene::Scene s = scene::generate_scene({}, 43, 1);
    model::InferenceResult inf;
    inf.model_origin = scene::pose_at(s.ego.track, 0);
    inf.plan = std::vector<geom::Vec2>(geom::kFutureFrames, {1.0, 0.0});
    model::AgentPrediction pred;
    pred.slot = 0;
    pred.detection.pose = {2.0, 1.0, 0.0};
    pred.waypoints = std::vector<geom::Vec2>(geom::kFutureFrames, {3.0, 1.0});
    inf.predictions.push_back(pred);

    const std::string svg = viz::render_svg(s, &inf);
    const std::string base = viz::render_svg(s, nullptr);
    CHECK(svg.size() > base.size());
    CHECK(svg.find("stroke=\"#d93025\"") != std::string::npos);   // prediction
    CHECK(svg.find("stroke-width=\"3\"") != std::string::npos);   // plan
    CHECK(count_of(svg, "<circle") >= inf.plan.size() + 1 + 1);
}

TEST_CASE("viewport options are validated") {
    const scene::Scene s = scene::generate_scene({}, 44, 2);
    viz::SvgOptions bad;
    bad.extent = 0.0;
    CHECK_THROWS_AS(viz::render_svg(s, nullptr, bad), InputError);
    bad.extent = 50.0;
    bad.pixels = -1;
    CHECK_THROWS_AS(viz::render_svg(s, nullptr, bad), InputError);
}
