#pragma once

#include <string>

#include "drivegen/model.hpp"

namespace drivegen::viz {

struct SvgOptions {
    double extent = 70.0;  ///< viewport side in meters, centered on the ego at frame 0
    int pixels = 800;      ///< square canvas edge
    bool gt_futures = true;
};

/// Top-down scene plot: map polylines by category, agent boxes at frame 0,
/// ground-truth futures, plus (when an inference result is given) the
/// decoded detections, predicted futures and the ego plan. Pure string
/// building, same bytes for the same inputs.
std::string render_svg(const scene::Scene& s, const model::InferenceResult* inference,
                       const SvgOptions& opt = {});

}  // namespace drivegen::viz
