#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "drivegen/param_store.hpp"

namespace drivegen::nn {

struct AdamWConfig {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;  ///< decoupled: applied to the parameter, not the gradient
};

/// First/second moment estimates for one parameter tensor.
struct Moments {
    std::vector<double> m;
    std::vector<double> v;
};

struct AdamWState {
    int64_t step = 0;  ///< completed update count (bias correction uses step+1)
    std::map<std::string, Moments> moments;
};

/// Half-cosine decay from `base` at step 0 to 0 at step `total`.
double cosine_lr(double base, int64_t step, int64_t total);

/// One AdamW update over every parameter in sorted-name order, using the
/// gradients currently accumulated in the store. Parameters and moments are
/// rounded through float32 afterwards (see round_f32). Lazily initializes
/// moments for new parameters.
void adamw_step(ParamStore& params, AdamWState& state, const AdamWConfig& cfg, double lr_now);

}  // namespace drivegen::nn
