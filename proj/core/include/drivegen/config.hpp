#pragma once

#include <string>

#include "drivegen/metrics.hpp"
#include "drivegen/scene_gen.hpp"
#include "drivegen/trainer.hpp"

namespace drivegen::config {

/// Everything a run needs, bundled so commands can echo it verbatim.
struct RunConfig {
    scene::SceneGenConfig scene_gen;
    model::ModelConfig model;
    train::TrainConfig train;
    eval::MetricMode metric_mode = eval::MetricMode::kAtTimestep;
    model::SampleMode sample_mode = model::SampleMode::kMean;
    struct Ablation {
        int train_scenes = 64;
        int eval_scenes = 16;
        uint64_t data_seed = 0;
        uint64_t init_seed = 1;
    } ablation;
};

/// The token width appears in four sub-configs that must agree; this sets
/// them all.
void set_model_dim(model::ModelConfig& mc, int dim);

/// Swaps the desk-scale dimensions for the full-scale ones (256-wide tokens,
/// 512-wide latent, 100 map tokens, 300 agent slots, 100x100 raster). Only
/// worth it on serious hardware.
void apply_full_scale(RunConfig& rc);

/// Parses the TOML-style config format: [section] headers, key = value
/// lines, # comments. Values are integers, floats, booleans or quoted
/// strings. Unknown sections or keys and type mismatches throw InputError
/// naming the line and field; later duplicates overwrite earlier ones.
/// Sections and keys are documented in the README.
RunConfig parse_run_config(const std::string& text);

/// parse_run_config over a file; errors mention the path.
RunConfig load_run_config(const std::string& path);

/// Inverse of run_config_to_json, so a run can be rebuilt from the echo a
/// checkpoint or report carries. Missing keys keep their defaults; unknown
/// keys are rejected like in the file parser.
RunConfig run_config_from_json(const std::string& text);

/// Full echo of a config as stable JSON: every field in a fixed order, so
/// two equal configs always serialize to the same bytes.
std::string run_config_to_json(const RunConfig& rc);

}  // namespace drivegen::config
