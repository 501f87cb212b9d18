#include "drivegen/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "drivegen/check.hpp"
#include "drivegen/matching.hpp"

namespace drivegen::eval {
namespace {

using geom::Pose2;
using geom::Vec2;

Pose2 model_origin_of(const scene::Scene& s) { return scene::pose_at(s.ego.track, 0); }

std::vector<Vec2> future_model_frame(const scene::Scene& s, const geom::Trajectory& track) {
    const Pose2 inv = geom::se2_invert(model_origin_of(s));
    std::vector<Vec2> out;
    out.reserve(geom::kFutureFrames);
    for (int t = 1; t <= geom::kFutureFrames; ++t) {
        out.push_back(geom::se2_apply(inv, track.waypoints[scene::track_index(t)].pos()));
    }
    return out;
}

}  // namespace

MetricMode metric_mode_from_string(const std::string& name) {
    // Accept either separator so shell users can type at_timestep.
    std::string canon = name;
    std::replace(canon.begin(), canon.end(), '_', '-');
    if (canon == "at-timestep") return MetricMode::kAtTimestep;
    if (canon == "frame-averaged") return MetricMode::kFrameAveraged;
    throw InputError("unknown metric mode: " + name);
}

std::string to_string(MetricMode m) {
    switch (m) {
        case MetricMode::kAtTimestep: return "at-timestep";
        case MetricMode::kFrameAveraged: return "frame-averaged";
    }
    throw InputError("unknown metric mode value");
}

int horizon_frame(int horizon) {
    check_arg(horizon >= 1 && horizon <= kHorizons, "horizon out of range");
    return 2 * horizon;
}

PlanScore score_plan(const scene::Scene& s, std::span<const geom::Vec2> plan_model,
                     MetricMode mode) {
    check_arg(plan_model.size() == static_cast<size_t>(geom::kFutureFrames),
              "plan must cover every future frame");
    const std::vector<Vec2> gt = future_model_frame(s, s.ego.track);

    PlanScore score;
    std::array<double, geom::kFutureFrames> frame_err{};
    for (int k = 0; k < geom::kFutureFrames; ++k) {
        frame_err[k] = (plan_model[k] - gt[k]).norm();
    }
    for (int h = 1; h <= kHorizons; ++h) {
        const int f = horizon_frame(h);
        if (mode == MetricMode::kAtTimestep) {
            score.l2[h - 1] = frame_err[f - 1];
        } else {
            double acc = 0.0;
            for (int k = 0; k < f; ++k) acc += frame_err[k];
            score.l2[h - 1] = acc / f;
        }
    }

    // Oriented ego boxes along the plan, collided against ground truth.
    const Pose2 origin = model_origin_of(s);
    geom::Trajectory plan_traj;
    plan_traj.frame = geom::Frame::kSceneGlobal;
    plan_traj.waypoints.push_back({origin.x, origin.y, 0});
    for (int k = 0; k < geom::kFutureFrames; ++k) {
        const Vec2 p = geom::se2_apply(origin, plan_model[k]);
        plan_traj.waypoints.push_back({p.x, p.y, k + 1});
    }
    std::array<bool, geom::kFutureFrames> frame_hit{};
    for (int k = 1; k <= geom::kFutureFrames; ++k) {
        const geom::OrientedBox ego_box{
            {plan_traj.waypoints[k].x, plan_traj.waypoints[k].y,
             geom::heading_at(plan_traj, k)},
            s.ego.length,
            s.ego.width};
        for (const auto& agent : s.agents) {
            if (geom::boxes_overlap(ego_box, scene::agent_box_at(agent, k))) {
                frame_hit[k - 1] = true;
                break;
            }
        }
    }
    for (int h = 1; h <= kHorizons; ++h) {
        bool any = false;
        for (int k = 0; k < horizon_frame(h); ++k) any = any || frame_hit[k];
        score.collision[h - 1] = any;
    }
    return score;
}

std::vector<Vec2> constant_velocity_plan(const scene::Scene& s) {
    const Pose2 inv = geom::se2_invert(model_origin_of(s));
    const Vec2 p0 = geom::se2_apply(
        inv, s.ego.track.waypoints[scene::track_index(0)].pos());
    const Vec2 p_prev = geom::se2_apply(
        inv, s.ego.track.waypoints[scene::track_index(-1)].pos());
    const Vec2 step = p0 - p_prev;
    std::vector<Vec2> plan;
    plan.reserve(geom::kFutureFrames);
    for (int k = 1; k <= geom::kFutureFrames; ++k) {
        plan.push_back({p0.x + step.x * k, p0.y + step.y * k});
    }
    return plan;
}

std::vector<Vec2> ground_truth_plan(const scene::Scene& s) {
    return future_model_frame(s, s.ego.track);
}

SceneEval evaluate_scene(const nn::ParamStore& ps, const model::ModelConfig& cfg,
                         model::Variant variant, const scene::Scene& s,
                         const scene::BevGrid& grid, MetricMode mode,
                         model::SampleMode sample_mode, RngStream* rng, bool use_gt_plan) {
    const model::InferenceResult inf =
        model::run_inference(ps, cfg, variant, s, grid, sample_mode, rng);

    SceneEval ev;
    ev.plan = score_plan(s, use_gt_plan ? ground_truth_plan(s) : inf.plan, mode);

    // Ground truth the detector is accountable for: agents inside the raster.
    const Pose2 inv = geom::se2_invert(model_origin_of(s));
    const double half = cfg.bev.extent / 2.0;
    std::vector<int> visible;
    std::vector<Vec2> gt_now;
    std::vector<Vec2> gt_end;
    for (size_t i = 0; i < s.agents.size(); ++i) {
        const auto& track = s.agents[i].track;
        const Vec2 now =
            geom::se2_apply(inv, track.waypoints[scene::track_index(0)].pos());
        if (std::abs(now.x) > half || std::abs(now.y) > half) continue;
        visible.push_back(static_cast<int>(i));
        gt_now.push_back(now);
        gt_end.push_back(geom::se2_apply(
            inv, track.waypoints[scene::track_index(geom::kFutureFrames)].pos()));
    }
    ev.gt_agents = static_cast<int>(visible.size());
    ev.detections = static_cast<int>(inf.predictions.size());

    if (!visible.empty() && !inf.predictions.empty()) {
        std::vector<double> cost(visible.size() * inf.predictions.size());
        for (size_t g = 0; g < visible.size(); ++g) {
            for (size_t d = 0; d < inf.predictions.size(); ++d) {
                const auto& pose = inf.predictions[d].detection.pose;
                cost[g * inf.predictions.size() + d] =
                    std::hypot(pose.x - gt_now[g].x, pose.y - gt_now[g].y);
            }
        }
        const model::Assignment match = model::hungarian_match(
            cost, static_cast<int>(visible.size()), static_cast<int>(inf.predictions.size()));
        for (size_t g = 0; g < visible.size(); ++g) {
            const int d = match.row_to_col[g];
            if (d < 0 || cost[g * inf.predictions.size() + d] > kMatchGate) continue;
            ++ev.matches;
            const Vec2 end = inf.predictions[d].waypoints.back();
            const double end_err = std::hypot(end.x - gt_end[g].x, end.y - gt_end[g].y);
            ev.pred_l2_sum += end_err;
            if (end_err <= kMatchGate) ++ev.hits;
        }
    }
    ev.false_positives = ev.detections - ev.matches;
    return ev;
}

DatasetMetrics aggregate(std::span<const SceneEval> evals, MetricMode mode) {
    DatasetMetrics m;
    m.mode = mode;
    m.scenes = static_cast<int>(evals.size());
    if (evals.empty()) return m;
    for (const SceneEval& ev : evals) {
        for (int h = 0; h < kHorizons; ++h) {
            m.plan_l2[h] += ev.plan.l2[h];
            m.collision_rate[h] += ev.plan.collision[h] ? 1.0 : 0.0;
        }
        m.gt_agents += ev.gt_agents;
        m.matches += ev.matches;
        m.hits += ev.hits;
        m.false_positives += ev.false_positives;
        m.pred_l2 += ev.pred_l2_sum;
    }
    for (int h = 0; h < kHorizons; ++h) {
        m.plan_l2[h] /= m.scenes;
        m.collision_rate[h] /= m.scenes;
    }
    m.pred_l2 = m.matches > 0 ? m.pred_l2 / m.matches : 0.0;
    if (m.gt_agents > 0) {
        m.epa = std::max(-1.0, (m.hits - 0.5 * m.false_positives) / m.gt_agents);
    }
    return m;
}

std::string metrics_to_json(const DatasetMetrics& m) {
    nlohmann::json j;
    j["mode"] = to_string(m.mode);
    j["scenes"] = m.scenes;
    for (int h = 1; h <= kHorizons; ++h) {
        const std::string suffix = std::to_string(h) + "s";
        j["plan_l2_" + suffix] = m.plan_l2[h - 1];
        j["collision_rate_" + suffix] = m.collision_rate[h - 1];
    }
    j["epa"] = m.epa;
    j["pred_l2"] = m.pred_l2;
    j["gt_agents"] = m.gt_agents;
    j["matches"] = m.matches;
    j["hits"] = m.hits;
    j["false_positives"] = m.false_positives;
    return j.dump(2) + "\n";
}

std::string evaluation_report_json(const std::string& config_json, uint64_t seed,
                                   const DatasetMetrics& m) {
    nlohmann::ordered_json config = nlohmann::ordered_json::parse(config_json);
    check_arg(config.is_object(), "evaluation report config must be a JSON object");
    nlohmann::ordered_json report;
    report["config"] = std::move(config);
    report["seed"] = seed;
    report["metrics"] = nlohmann::ordered_json::parse(metrics_to_json(m));
    return report.dump(2) + "\n";
}

DatasetMetrics evaluate_dataset(const nn::ParamStore& ps, const model::ModelConfig& cfg,
                                model::Variant variant, std::span<const scene::Scene> scenes,
                                MetricMode mode, model::SampleMode sample_mode, uint64_t seed,
                                bool use_gt_plan) {
    std::vector<SceneEval> evals;
    evals.reserve(scenes.size());
    for (size_t i = 0; i < scenes.size(); ++i) {
        const scene::BevGrid grid = model::model_grid(scenes[i], cfg);
        RngStream rng(RngStream::mix(seed, i));
        evals.push_back(evaluate_scene(ps, cfg, variant, scenes[i], grid, mode, sample_mode,
                                       sample_mode == model::SampleMode::kSample ? &rng : nullptr,
                                       use_gt_plan));
    }
    return aggregate(evals, mode);
}

}  // namespace drivegen::eval
