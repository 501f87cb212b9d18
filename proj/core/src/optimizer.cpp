#include "drivegen/optimizer.hpp"

#include <cmath>
#include <numbers>

#include "drivegen/check.hpp"

namespace drivegen::nn {

double cosine_lr(double base, int64_t step, int64_t total) {
    check_arg(total > 0, "cosine_lr: total must be positive");
    const double t = std::clamp(static_cast<double>(step) / static_cast<double>(total), 0.0, 1.0);
    return base * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void adamw_step(ParamStore& params, AdamWState& state, const AdamWConfig& cfg, double lr_now) {
    const int64_t t = state.step + 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));

    for (auto& [name, tensor] : params) {
        Moments& mom = state.moments[name];
        const size_t n = tensor.values().size();
        if (mom.m.size() != n) {
            mom.m.assign(n, 0.0);
            mom.v.assign(n, 0.0);
        }
        const std::vector<double>& g = tensor.grad();
        std::vector<double>& p = tensor.mutable_values();
        for (size_t i = 0; i < n; ++i) {
            check_state(std::isfinite(g[i]), "adamw_step: non-finite gradient in \"" + name + "\"");
            mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g[i];
            mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = mom.m[i] / bc1;
            const double vhat = mom.v[i] / bc2;
            p[i] -= lr_now * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * p[i]);
            p[i] = round_f32(p[i]);
            mom.m[i] = round_f32(mom.m[i]);
            mom.v[i] = round_f32(mom.v[i]);
        }
    }
    state.step = t;
}

}  // namespace drivegen::nn
