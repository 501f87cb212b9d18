#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "drivegen/model.hpp"

namespace drivegen::eval {

/// l2 readout convention: error at the horizon frame itself, or averaged
/// over every frame up to it.
enum class MetricMode { kAtTimestep, kFrameAveraged };
MetricMode metric_mode_from_string(const std::string& name);
std::string to_string(MetricMode m);

/// Horizons reported: 1, 2 and 3 seconds.
inline constexpr int kHorizons = 3;
/// Future frame index of a 1-based horizon (2 Hz keyframes).
int horizon_frame(int horizon);

/// Detections and endpoint predictions count as correct within this radius.
inline constexpr double kMatchGate = 2.0;

struct PlanScore {
    std::array<double, kHorizons> l2{};
    /// Any oriented-box overlap between the planned ego and a ground-truth
    /// agent at a frame up to the horizon.
    std::array<bool, kHorizons> collision{};
};

/// Scores an ego plan (model frame, kFutureFrames waypoints) against the
/// scene's ground truth.
PlanScore score_plan(const scene::Scene& s, std::span<const geom::Vec2> plan_model,
                     MetricMode mode);

/// Ego future extrapolated from the last past segment (model frame).
std::vector<geom::Vec2> constant_velocity_plan(const scene::Scene& s);
/// Ground-truth ego future (model frame).
std::vector<geom::Vec2> ground_truth_plan(const scene::Scene& s);

struct SceneEval {
    PlanScore plan;
    int gt_agents = 0;        ///< raster-visible ground-truth agents
    int detections = 0;       ///< foreground slots
    int matches = 0;          ///< detections matched to ground truth within the gate
    int hits = 0;             ///< matches whose 3 s prediction endpoint is also in the gate
    int false_positives = 0;  ///< foreground detections left unmatched
    double pred_l2_sum = 0.0; ///< final-step prediction error, summed over matches
};

/// Runs inference on one scene and scores plan and predictions. use_gt_plan
/// swaps the planned ego trajectory for the ground truth (predictions and
/// detections still come from the model).
SceneEval evaluate_scene(const nn::ParamStore& ps, const model::ModelConfig& cfg,
                         model::Variant variant, const scene::Scene& s,
                         const scene::BevGrid& grid, MetricMode mode,
                         model::SampleMode sample_mode, RngStream* rng,
                         bool use_gt_plan = false);

struct DatasetMetrics {
    MetricMode mode = MetricMode::kAtTimestep;
    int scenes = 0;
    std::array<double, kHorizons> plan_l2{};         ///< means over scenes
    std::array<double, kHorizons> collision_rate{};  ///< scene fractions
    /// (hits - false positives / 2) / ground-truth count over dataset
    /// totals, floored at -1; 0 when there is no ground truth.
    double epa = 0.0;
    double pred_l2 = 0.0;  ///< mean final-step prediction error over matches
    int gt_agents = 0, matches = 0, hits = 0, false_positives = 0;
};

DatasetMetrics aggregate(std::span<const SceneEval> evals, MetricMode mode);

/// Scores every scene and aggregates. In sample mode, scene i draws latents
/// from a stream seeded with mix(seed, i), so results reproduce for a fixed
/// seed; mean mode ignores the seed.
DatasetMetrics evaluate_dataset(const nn::ParamStore& ps, const model::ModelConfig& cfg,
                                model::Variant variant, std::span<const scene::Scene> scenes,
                                MetricMode mode, model::SampleMode sample_mode, uint64_t seed,
                                bool use_gt_plan = false);

/// Stable JSON rendering (keys sorted) for logs and files.
std::string metrics_to_json(const DatasetMetrics& m);

/// Full evaluation report: the run config echo, the eval seed, and the
/// metrics block. This is the document schemas/eval_report.schema.json
/// describes. `config_json` must be a JSON object (a run config echo).
std::string evaluation_report_json(const std::string& config_json, uint64_t seed,
                                   const DatasetMetrics& m);

}  // namespace drivegen::eval
