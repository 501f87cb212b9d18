#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "drivegen/rng.hpp"
#include "drivegen/tensor.hpp"

namespace drivegen::nn {

/// Nearest float32, widened back to double. Parameters and optimizer moments
/// are kept on this sub-lattice so float32 checkpoints round-trip losslessly
/// and a resumed run is bitwise identical to an uninterrupted one.
inline double round_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void round_f32_inplace(std::vector<double>& values);

/// Registry of named trainable tensors. Iteration is in sorted-name order,
/// which fixes the update and serialization order for reproducibility.
class ParamStore {
public:
    /// Registers a zero tensor with requires_grad set. Throws on duplicates.
    Tensor& create(const std::string& name, int rows, int cols);

    /// Registers a tensor initialized uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
    /// rounded through float32.
    Tensor& create_uniform(const std::string& name, int rows, int cols, int fan_in,
                           RngStream& rng);

    /// Registers a tensor filled with a constant.
    Tensor& create_const(const std::string& name, int rows, int cols, double value);

    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const;

    size_t size() const { return params_.size(); }
    /// Total number of scalar parameters.
    size_t parameter_count() const;

    void zero_grad();

    std::vector<std::string> names() const;

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::map<std::string, Tensor> params_;
};

}  // namespace drivegen::nn
