#pragma once

#include <string>
#include <vector>

#include "drivegen/bev.hpp"
#include "drivegen/latent.hpp"
#include "drivegen/tokenizer.hpp"

namespace drivegen::model {

struct ModelConfig {
    TokenizerConfig tokenizer;
    GenerationConfig generation;
    scene::BevConfig bev;
};
/// Throws InputError when the sub-configs disagree (token widths must match).
void validate_model_config(const ModelConfig& cfg);

/// Ablations, applied at forward time over one shared parameter set.
enum class Variant {
    kFull,
    kNoEgoToAgent,     ///< agent rows cannot attend to the ego token
    kNoMapInjection,   ///< instance tokens skip the map cross-attention
    kNoRollout,        ///< trajectories decoded in one shot from the latent
    kNoMapNoRollout,   ///< both of the above
};
Variant variant_from_string(const std::string& name);
std::string to_string(Variant v);
/// All variants, in a fixed report order.
std::vector<Variant> all_variants();

void init_model(nn::ParamStore& ps, const ModelConfig& cfg, RngStream& rng);

/// Scene raster in the frame of the ego pose at the current frame; both
/// forward passes consume it, callers may cache it per scene.
scene::BevGrid model_grid(const scene::Scene& s, const ModelConfig& cfg);

/// Axis-aligned stand-in for an oriented box (model frame), used by the
/// differentiable ego-safety penalty.
struct AabbObstacle {
    double cx = 0.0, cy = 0.0;  ///< center
    double hx = 0.0, hy = 0.0;  ///< half extents
};

/// Everything one optimization step needs: live head/trajectory tensors plus
/// the constant supervision targets derived from the scene.
struct TrainingForward {
    nn::Tensor agent_raw;  ///< slots x (4 + classes): x, y, sin, cos, logits
    nn::Tensor map_raw;    ///< map_tokens x (2*kMapPoints + classes)

    // Detection supervision; matched ground-truth agents in ground-truth
    // order. Agents outside the raster extent are not supervised.
    std::vector<int> det_rows;           ///< matched slot per supervised agent
    nn::Tensor det_target;               ///< n x 4 (x, y, sin, cos), model frame
    std::vector<int> slot_class_target;  ///< per slot: 0 foreground, 1 background

    std::vector<int> map_rows;          ///< matched token per supervised element
    nn::Tensor map_target;              ///< m x 2*kMapPoints, model frame
    std::vector<int> map_class_target;  ///< per token: category or background

    // Latent path over ego (row 0) plus the supervised agents, same order as
    // det_rows. Futures are flattened per-instance egocentric waypoints.
    LatentGaussian instance_dist;
    LatentGaussian future_dist;
    nn::Tensor pred_futures;  ///< (1+n) x 2*kFutureFrames
    nn::Tensor gt_futures;    ///< same shape, constant

    // Context for the ego-safety penalties (model frame).
    double ego_half_length = 0.0;
    double ego_half_width = 0.0;
    std::vector<std::vector<AabbObstacle>> obstacles;  ///< [future step 1..F][agent]
    std::vector<geom::Polyline> map_model;             ///< clipped to the raster extent
};

/// Teacher-forced pass: the latent is drawn from the future encoding
/// (reparameterized in sample mode, so gradients reach both encoders).
TrainingForward run_training_forward(const nn::ParamStore& ps, const ModelConfig& cfg,
                                     Variant variant, const scene::Scene& s,
                                     const scene::BevGrid& grid, SampleMode teacher_mode,
                                     RngStream* rng);

struct AgentPrediction {
    int slot = -1;
    AgentDetection detection;
    std::vector<geom::Vec2> waypoints;  ///< model frame, kFutureFrames entries
};

struct InferenceResult {
    geom::Pose2 model_origin;                  ///< scene-frame anchor of all outputs
    std::vector<AgentDetection> detections;    ///< one per slot
    std::vector<AgentPrediction> predictions;  ///< foreground slots only
    std::vector<geom::Vec2> plan;              ///< ego, kFutureFrames waypoints
};

/// Deployment pass: the latent comes from the instance encoding alone;
/// agent trajectories are anchored at the decoded poses. rng may be null in
/// mean mode.
InferenceResult run_inference(const nn::ParamStore& ps, const ModelConfig& cfg, Variant variant,
                              const scene::Scene& s, const scene::BevGrid& grid, SampleMode mode,
                              RngStream* rng);

}  // namespace drivegen::model
