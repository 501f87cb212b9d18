#pragma once

#include <functional>
#include <string>
#include <vector>

#include "drivegen/metrics.hpp"
#include "drivegen/scene_gen.hpp"
#include "drivegen/trainer.hpp"

namespace drivegen::eval {

struct AblationConfig {
    model::ModelConfig model;
    train::TrainConfig train;  ///< variant and checkpoint fields are overridden per row
    scene::SceneGenConfig scene_gen;
    int train_scenes = 64;
    int eval_scenes = 16;
    uint64_t data_seed = 0;  ///< train and held-out sets use disjoint child seeds
    uint64_t init_seed = 1;  ///< every variant starts from identical weights
    MetricMode metric_mode = MetricMode::kAtTimestep;
};

struct AblationRow {
    model::Variant variant = model::Variant::kFull;
    double first_loss = 0.0;  ///< mean total loss of the first epoch
    double final_loss = 0.0;  ///< and of the last
    DatasetMetrics metrics;   ///< held-out, mean-mode latents
};

struct AblationReport {
    std::vector<AblationRow> rows;  ///< one per variant, in declaration order
};

using AblationProgress = std::function<void(model::Variant, const train::EpochLog&)>;

/// Trains every variant from the same initial weights on the same scenes,
/// then scores each on the same held-out set. Everything is derived from the
/// config seeds, so a report is reproducible down to the serialized bytes.
AblationReport run_ablation(const AblationConfig& cfg,
                            const AblationProgress& progress = nullptr);

/// One row per variant; numbers use shortest-round-trip formatting.
std::string ablation_to_csv(const AblationReport& report);
std::string ablation_to_json(const AblationReport& report);

}  // namespace drivegen::eval
