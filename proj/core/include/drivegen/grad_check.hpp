#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "drivegen/param_store.hpp"
#include "drivegen/tensor.hpp"

namespace drivegen::nn {

struct GradCheckConfig {
    double eps = 1e-4;         ///< central-difference step
    int coords_per_tensor = 5; ///< sampled coordinates per parameter tensor (<=0 checks all)
    uint64_t seed = 0;         ///< coordinate sampling seed
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    int worst_index = -1;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    size_t coords_checked = 0;
};

/// Compares reverse-mode gradients of build_loss() against central finite
/// differences. build_loss must construct a fresh scalar graph from the
/// current parameter values on every call and must not itself run backward.
/// Relative error is |a - n| / max(1, |a|, |n|) per coordinate.
///
/// Parameter values are perturbed in place (without float32 rounding, so the
/// perturbation is exact) and restored before returning.
GradCheckReport check_gradients(ParamStore& params, const std::function<Tensor()>& build_loss,
                                const GradCheckConfig& cfg = {});

}  // namespace drivegen::nn
