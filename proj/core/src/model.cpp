#include "drivegen/model.hpp"

#include <algorithm>
#include <cmath>

#include "drivegen/check.hpp"
#include "drivegen/matching.hpp"

namespace drivegen::model {
namespace {

using geom::Pose2;
using geom::Trajectory;
using geom::Vec2;

geom::Pose2 model_origin_of(const scene::Scene& s) { return scene::pose_at(s.ego.track, 0); }

bool uses_map_injection(Variant v) {
    return v != Variant::kNoMapInjection && v != Variant::kNoMapNoRollout;
}
bool uses_rollout(Variant v) {
    return v != Variant::kNoRollout && v != Variant::kNoMapNoRollout;
}

/// Future waypoints of a full-window track, flattened in the frame of the
/// track's own pose at the current frame.
std::vector<double> future_in_own_frame(const Trajectory& track) {
    const Pose2 inv = geom::se2_invert(scene::pose_at(track, 0));
    std::vector<double> flat;
    flat.reserve(2 * geom::kFutureFrames);
    for (int t = 1; t <= geom::kFutureFrames; ++t) {
        const Vec2 p = geom::se2_apply(inv, track.waypoints[scene::track_index(t)].pos());
        flat.push_back(p.x);
        flat.push_back(p.y);
    }
    return flat;
}

struct TokenStage {
    nn::Tensor instances;   ///< (1 + slots) x dim, fused (and injected) tokens
    nn::Tensor map_tokens;  ///< map_tokens x dim
};

TokenStage tokenize(const nn::ParamStore& ps, const ModelConfig& cfg, Variant variant,
                    const scene::Scene& s, const scene::BevGrid& grid) {
    const Pose2 to_model = geom::se2_invert(model_origin_of(s));
    TokenStage out;
    out.map_tokens = encode_map_tokens(ps, cfg.tokenizer, bev_cell_features(grid));
    const nn::Tensor agent_toks = encode_agent_tokens(ps, cfg.tokenizer, grid);
    const Trajectory ego_past = geom::se2_apply(to_model, scene::past_of(s.ego.track),
                                                geom::Frame::kEgoCentric);
    const nn::Tensor ego_tok = encode_ego_token(ps, cfg.tokenizer, ego_past);
    out.instances = fuse_instances(ps, cfg.tokenizer, ego_tok, agent_toks,
                                   variant == Variant::kNoEgoToAgent);
    if (uses_map_injection(variant)) {
        out.instances = inject_map(ps, cfg.tokenizer, out.instances, out.map_tokens);
    }
    return out;
}

/// Latent trajectory generation for the selected instance rows. zs come from
/// `dist` (sampled or mean); rows decode in their own egocentric frames.
nn::Tensor generate(const nn::ParamStore& ps, const ModelConfig& cfg, Variant variant,
                    const LatentGaussian& dist, SampleMode mode, RngStream* rng) {
    const nn::Tensor z = sample_latent(dist, mode, rng);
    if (uses_rollout(variant)) {
        return decode_waypoints(ps, cfg.generation,
                                rollout(ps, cfg.generation, z, geom::kFutureFrames));
    }
    return decode_whole_trajectory(ps, cfg.generation, z);
}

}  // namespace

void validate_model_config(const ModelConfig& cfg) {
    check_arg(cfg.tokenizer.dim == cfg.generation.dim,
              "tokenizer and generator widths must match");
    check_arg(cfg.bev.cells >= 2 && cfg.bev.extent > 0.0, "raster config must be positive");
}

Variant variant_from_string(const std::string& name) {
    if (name == "full") return Variant::kFull;
    if (name == "no-ego-to-agent") return Variant::kNoEgoToAgent;
    if (name == "no-map-injection") return Variant::kNoMapInjection;
    if (name == "no-rollout") return Variant::kNoRollout;
    if (name == "no-map-no-rollout") return Variant::kNoMapNoRollout;
    throw InputError("unknown variant: " + name);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::kFull: return "full";
        case Variant::kNoEgoToAgent: return "no-ego-to-agent";
        case Variant::kNoMapInjection: return "no-map-injection";
        case Variant::kNoRollout: return "no-rollout";
        case Variant::kNoMapNoRollout: return "no-map-no-rollout";
    }
    throw InputError("unknown variant value");
}

std::vector<Variant> all_variants() {
    return {Variant::kFull, Variant::kNoEgoToAgent, Variant::kNoMapInjection, Variant::kNoRollout,
            Variant::kNoMapNoRollout};
}

void init_model(nn::ParamStore& ps, const ModelConfig& cfg, RngStream& rng) {
    validate_model_config(cfg);
    init_tokenizer(ps, cfg.tokenizer, rng);
    init_generator(ps, cfg.generation, rng);
}

scene::BevGrid model_grid(const scene::Scene& s, const ModelConfig& cfg) {
    return scene::rasterize_bev(s, cfg.bev, model_origin_of(s));
}

TrainingForward run_training_forward(const nn::ParamStore& ps, const ModelConfig& cfg,
                                     Variant variant, const scene::Scene& s,
                                     const scene::BevGrid& grid, SampleMode teacher_mode,
                                     RngStream* rng) {
    validate_model_config(cfg);
    const Pose2 origin = model_origin_of(s);
    const Pose2 to_model = geom::se2_invert(origin);
    const double half = cfg.bev.extent / 2.0;

    TrainingForward fwd;
    const TokenStage toks = tokenize(ps, cfg, variant, s, grid);
    fwd.agent_raw = decode_agents_raw(ps, toks.instances);
    fwd.map_raw = decode_map_raw(ps, toks.map_tokens);

    // --- detection matching over ground-truth agents inside the raster ---
    std::vector<int> visible;  // indices into s.agents
    std::vector<Vec2> gt_pos;
    std::vector<double> gt_heading;
    for (size_t i = 0; i < s.agents.size(); ++i) {
        const Pose2 pose = scene::pose_at(s.agents[i].track, 0);
        const Vec2 local = geom::se2_apply(to_model, Vec2{pose.x, pose.y});
        if (std::abs(local.x) > half || std::abs(local.y) > half) continue;
        visible.push_back(static_cast<int>(i));
        gt_pos.push_back(local);
        gt_heading.push_back(geom::normalize_heading(pose.heading - origin.heading));
    }
    const int slots = cfg.tokenizer.agent_slots;
    fwd.slot_class_target.assign(slots, kAgentClasses);
    std::vector<int> matched_agents;  // indices into s.agents, parallel to det_rows
    if (!visible.empty()) {
        std::vector<double> cost(visible.size() * slots);
        for (size_t g = 0; g < visible.size(); ++g) {
            for (int sl = 0; sl < slots; ++sl) {
                const double dx = fwd.agent_raw.at(sl, 0) - gt_pos[g].x;
                const double dy = fwd.agent_raw.at(sl, 1) - gt_pos[g].y;
                cost[g * slots + sl] = std::hypot(dx, dy);
            }
        }
        const Assignment match =
            hungarian_match(cost, static_cast<int>(visible.size()), slots);
        std::vector<double> target;
        for (size_t g = 0; g < visible.size(); ++g) {
            if (match.row_to_col[g] < 0) continue;
            fwd.det_rows.push_back(match.row_to_col[g]);
            matched_agents.push_back(visible[g]);
            fwd.slot_class_target[match.row_to_col[g]] = 0;
            target.insert(target.end(), {gt_pos[g].x, gt_pos[g].y, std::sin(gt_heading[g]),
                                         std::cos(gt_heading[g])});
        }
        fwd.det_target = nn::Tensor(static_cast<int>(fwd.det_rows.size()), 4, target);
    }

    // --- map matching over raster-visible polyline pieces ---
    for (const auto& line : s.map) {
        geom::Polyline local;
        local.category = line.category;
        local.points = geom::se2_apply(to_model, line.points);
        // Supervise the longest visible piece of each source polyline.
        geom::Polyline best;
        best.category = local.category;
        double best_len = 0.0;
        for (auto& piece : geom::clip_polyline_axis_box(local, half)) {
            const double len = geom::polyline_length(piece.points);
            if (len > best_len) {
                best_len = len;
                best = std::move(piece);
            }
        }
        if (best.points.size() >= 2) fwd.map_model.push_back(std::move(best));
    }
    const int map_tokens = cfg.tokenizer.map_tokens;
    fwd.map_class_target.assign(map_tokens, kMapClasses);
    if (!fwd.map_model.empty()) {
        std::vector<std::vector<Vec2>> gt_points;
        for (const auto& line : fwd.map_model) {
            gt_points.push_back(geom::resample_polyline(line.points, kMapPoints));
        }
        std::vector<double> cost(gt_points.size() * map_tokens);
        for (size_t e = 0; e < gt_points.size(); ++e) {
            for (int t = 0; t < map_tokens; ++t) {
                double acc = 0.0;
                for (int p = 0; p < kMapPoints; ++p) {
                    acc += std::abs(fwd.map_raw.at(t, 2 * p) - gt_points[e][p].x) +
                           std::abs(fwd.map_raw.at(t, 2 * p + 1) - gt_points[e][p].y);
                }
                cost[e * map_tokens + t] = acc / (2 * kMapPoints);
            }
        }
        const Assignment match =
            hungarian_match(cost, static_cast<int>(gt_points.size()), map_tokens);
        std::vector<double> target;
        for (size_t e = 0; e < gt_points.size(); ++e) {
            if (match.row_to_col[e] < 0) continue;
            fwd.map_rows.push_back(match.row_to_col[e]);
            fwd.map_class_target[match.row_to_col[e]] =
                static_cast<int>(fwd.map_model[e].category);
            for (const Vec2& p : gt_points[e]) target.insert(target.end(), {p.x, p.y});
        }
        fwd.map_target =
            nn::Tensor(static_cast<int>(fwd.map_rows.size()), 2 * kMapPoints, target);
    }

    // --- latent path: ego plus the matched agents, teacher-forced ---
    std::vector<int> rows{0};
    std::vector<double> futures = future_in_own_frame(s.ego.track);
    for (size_t k = 0; k < matched_agents.size(); ++k) {
        rows.push_back(1 + fwd.det_rows[k]);
        const std::vector<double> f = future_in_own_frame(s.agents[matched_agents[k]].track);
        futures.insert(futures.end(), f.begin(), f.end());
    }
    const int n_rows = static_cast<int>(rows.size());
    fwd.gt_futures = nn::Tensor(n_rows, 2 * geom::kFutureFrames, futures);
    const nn::Tensor selected = nn::rows_at(toks.instances, rows);
    fwd.instance_dist = encode_instance(ps, cfg.generation, selected);
    fwd.future_dist = encode_future(ps, cfg.generation, fwd.gt_futures);
    fwd.pred_futures = generate(ps, cfg, variant, fwd.future_dist, teacher_mode, rng);

    // --- ego-safety context ---
    fwd.ego_half_length = s.ego.length / 2.0;
    fwd.ego_half_width = s.ego.width / 2.0;
    fwd.obstacles.resize(geom::kFutureFrames);
    for (int t = 1; t <= geom::kFutureFrames; ++t) {
        for (const auto& agent : s.agents) {
            const auto corners = geom::box_corners(scene::agent_box_at(agent, t));
            double min_x = 0.0, max_x = 0.0, min_y = 0.0, max_y = 0.0;
            for (size_t c = 0; c < corners.size(); ++c) {
                const Vec2 local = geom::se2_apply(to_model, corners[c]);
                if (c == 0) {
                    min_x = max_x = local.x;
                    min_y = max_y = local.y;
                } else {
                    min_x = std::min(min_x, local.x);
                    max_x = std::max(max_x, local.x);
                    min_y = std::min(min_y, local.y);
                    max_y = std::max(max_y, local.y);
                }
            }
            fwd.obstacles[t - 1].push_back({(min_x + max_x) / 2, (min_y + max_y) / 2,
                                            (max_x - min_x) / 2, (max_y - min_y) / 2});
        }
    }
    return fwd;
}

InferenceResult run_inference(const nn::ParamStore& ps, const ModelConfig& cfg, Variant variant,
                              const scene::Scene& s, const scene::BevGrid& grid, SampleMode mode,
                              RngStream* rng) {
    validate_model_config(cfg);
    InferenceResult out;
    out.model_origin = model_origin_of(s);

    const TokenStage toks = tokenize(ps, cfg, variant, s, grid);
    const nn::Tensor agent_raw = decode_agents_raw(ps, toks.instances);
    out.detections = decode_agents(agent_raw);

    std::vector<int> rows{0};
    std::vector<int> fg_slots;
    for (size_t sl = 0; sl < out.detections.size(); ++sl) {
        if (!out.detections[sl].foreground) continue;
        fg_slots.push_back(static_cast<int>(sl));
        rows.push_back(1 + static_cast<int>(sl));
    }
    const LatentGaussian prior =
        encode_instance(ps, cfg.generation, nn::rows_at(toks.instances, rows));
    const nn::Tensor pred = generate(ps, cfg, variant, prior, mode, rng);

    out.plan.reserve(geom::kFutureFrames);
    for (int t = 0; t < geom::kFutureFrames; ++t) {
        out.plan.push_back({pred.at(0, 2 * t), pred.at(0, 2 * t + 1)});
    }
    for (size_t k = 0; k < fg_slots.size(); ++k) {
        AgentPrediction p;
        p.slot = fg_slots[k];
        p.detection = out.detections[fg_slots[k]];
        p.waypoints.reserve(geom::kFutureFrames);
        for (int t = 0; t < geom::kFutureFrames; ++t) {
            const Vec2 local{pred.at(static_cast<int>(k) + 1, 2 * t),
                             pred.at(static_cast<int>(k) + 1, 2 * t + 1)};
            p.waypoints.push_back(geom::se2_apply(p.detection.pose, local));
        }
        out.predictions.push_back(std::move(p));
    }
    return out;
}

}  // namespace drivegen::model
