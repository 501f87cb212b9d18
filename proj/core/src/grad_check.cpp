#include "drivegen/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "drivegen/check.hpp"
#include "drivegen/rng.hpp"

namespace drivegen::nn {

GradCheckReport check_gradients(ParamStore& params, const std::function<Tensor()>& build_loss,
                                const GradCheckConfig& cfg) {
    check_arg(cfg.eps > 0.0, "check_gradients: eps must be positive");

    params.zero_grad();
    Tensor loss = build_loss();
    check_arg(loss.size() == 1, "check_gradients: loss must be scalar");
    backward(loss);

    std::map<std::string, std::vector<double>> analytic;
    for (const auto& [name, t] : params) analytic[name] = t.grad();

    GradCheckReport report;
    uint64_t tensor_index = 0;
    for (auto& [name, t] : params) {
        const int n = t.size();
        std::vector<int> coords;
        if (cfg.coords_per_tensor <= 0 || cfg.coords_per_tensor >= n) {
            coords.resize(n);
            for (int i = 0; i < n; ++i) coords[i] = i;
        } else {
            RngStream rng(RngStream::mix(cfg.seed, tensor_index));
            for (int i = 0; i < cfg.coords_per_tensor; ++i)
                coords.push_back(static_cast<int>(rng.uniform_int(0, n - 1)));
            std::sort(coords.begin(), coords.end());
            coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        }
        ++tensor_index;

        std::vector<double>& vals = t.mutable_values();
        for (int ci : coords) {
            const double saved = vals[ci];
            vals[ci] = saved + cfg.eps;
            const double fp = build_loss().item();
            vals[ci] = saved - cfg.eps;
            const double fm = build_loss().item();
            vals[ci] = saved;

            const double numeric = (fp - fm) / (2.0 * cfg.eps);
            const double a = analytic[name][ci];
            const double rel =
                std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
            ++report.coords_checked;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = name;
                report.worst_index = ci;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace drivegen::nn
