#include "drivegen/param_store.hpp"

#include <cmath>

#include "drivegen/check.hpp"

namespace drivegen::nn {

void round_f32_inplace(std::vector<double>& values) {
    for (double& v : values) v = round_f32(v);
}

Tensor& ParamStore::create(const std::string& name, int rows, int cols) {
    check_arg(!contains(name), "ParamStore: duplicate parameter \"" + name + "\"");
    auto [it, ok] = params_.emplace(name, Tensor::zeros(rows, cols, /*requires_grad=*/true));
    (void)ok;
    return it->second;
}

Tensor& ParamStore::create_uniform(const std::string& name, int rows, int cols, int fan_in,
                                   RngStream& rng) {
    check_arg(fan_in > 0, "ParamStore: fan_in must be positive for \"" + name + "\"");
    Tensor& t = create(name, rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : t.mutable_values()) v = round_f32(rng.uniform(-bound, bound));
    return t;
}

Tensor& ParamStore::create_const(const std::string& name, int rows, int cols, double value) {
    Tensor& t = create(name, rows, cols);
    const double v32 = round_f32(value);
    for (double& v : t.mutable_values()) v = v32;
    return t;
}

Tensor& ParamStore::get(const std::string& name) {
    auto it = params_.find(name);
    check_arg(it != params_.end(), "ParamStore: unknown parameter \"" + name + "\"");
    return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    check_arg(it != params_.end(), "ParamStore: unknown parameter \"" + name + "\"");
    return it->second;
}

bool ParamStore::contains(const std::string& name) const { return params_.count(name) > 0; }

size_t ParamStore::parameter_count() const {
    size_t n = 0;
    for (const auto& [name, t] : params_) n += static_cast<size_t>(t.size());
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [name, t] : params_) t.zero_grad();
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, t] : params_) out.push_back(name);
    return out;
}

}  // namespace drivegen::nn
