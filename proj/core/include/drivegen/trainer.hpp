#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "drivegen/losses.hpp"
#include "drivegen/model.hpp"
#include "drivegen/optimizer.hpp"

namespace drivegen::train {

struct TrainConfig {
    int epochs = 40;
    double base_lr = 2e-4;
    nn::AdamWConfig adamw;  ///< lr field is ignored; the cosine schedule rules
    model::LossWeights weights;
    model::Variant variant = model::Variant::kFull;
    uint64_t seed = 0;  ///< drives shuffling and teacher noise
    model::SampleMode teacher_mode = model::SampleMode::kSample;
    int checkpoint_every = 0;     ///< in epochs; 0 saves only if a path is set
    std::string checkpoint_path;  ///< empty disables checkpoints entirely
    std::string config_echo_json = "{}";  ///< stored verbatim in checkpoints
};

struct EpochLog {
    int epoch = 0;   ///< 0-based
    double lr = 0.0; ///< value used for the epoch's last step
    double traj = 0.0, latent = 0.0, det = 0.0, map = 0.0, total = 0.0;  ///< scene means
};

using EpochCallback = std::function<void(const EpochLog&)>;

struct TrainResult {
    std::vector<EpochLog> history;  ///< epochs run by this call
    int64_t steps = 0;              ///< optimizer steps after the run
};

/// Streams the scenes one optimizer step each, `cfg.epochs` epochs total,
/// with a cosine learning-rate decay over all steps. Every epoch reshuffles
/// with a stream derived from (seed, epoch) and every scene draws teacher
/// noise from (seed, epoch, position), so the trajectory of updates depends
/// only on the config - resuming from a checkpoint replays the identical
/// arithmetic. The optimizer step count determines the resume epoch; pass a
/// fresh state to train from scratch and keep `cfg.epochs` at the original
/// horizon when resuming, since the schedule spans the whole run. Non-finite
/// losses abort with a StateError naming the term and scene.
TrainResult train(nn::ParamStore& ps, nn::AdamWState& opt, const model::ModelConfig& mc,
                  const TrainConfig& cfg, std::span<const scene::Scene> scenes,
                  const EpochCallback& on_epoch = nullptr);

}  // namespace drivegen::train
