#pragma once

#include <span>
#include <string>
#include <vector>

#include "drivegen/param_store.hpp"
#include "drivegen/tensor.hpp"

namespace drivegen::nn {

// Parameter naming convention: a block owning prefix "p" stores its pieces
// as "p.weight", "p.bias", "p.0.weight", "p.ln.gain", ... so that one prefix
// fully describes a block inside a shared ParamStore.

// ---- linear / MLP ----

void init_linear(ParamStore& ps, const std::string& prefix, int in, int out, RngStream& rng);
/// x (NxIn) -> x W + b (NxOut); W is "<prefix>.weight" (InxOut), b "<prefix>.bias".
Tensor linear(const ParamStore& ps, const std::string& prefix, const Tensor& x);

/// Fully connected stack "<prefix>.0", "<prefix>.1", ... with tanh between
/// layers and a linear head.
void init_mlp(ParamStore& ps, const std::string& prefix, std::span<const int> dims,
              RngStream& rng);
/// Runs as many layers as the store holds under the prefix.
Tensor mlp(const ParamStore& ps, const std::string& prefix, const Tensor& x);

// ---- layer norm ----

void init_layer_norm(ParamStore& ps, const std::string& prefix, int dim);
Tensor layer_norm(const ParamStore& ps, const std::string& prefix, const Tensor& x);

// ---- GRU ----

/// Gated recurrent unit with the update convention
///   h' = (1 - z) * n + z * h
/// so an all-zero parameter set halves the state each step (z = 1/2, n = 0);
/// the reset gate multiplies the recurrent branch of the candidate.
void init_gru(ParamStore& ps, const std::string& prefix, int in, int hidden, RngStream& rng);
Tensor gru_step(const ParamStore& ps, const std::string& prefix, const Tensor& x,
                const Tensor& h);

// ---- attention ----

struct AttentionConfig {
    int dim = 64;
    int heads = 4;
    int layers = 3;
    int ffn_mult = 2;  ///< hidden width of the per-layer feed-forward, as a multiple of dim
};

/// Per-head attention maps captured during a forward pass, ordered
/// (layer 0 head 0, layer 0 head 1, ..., layer L-1 head H-1).
struct AttentionDebug {
    std::vector<Tensor> weights;
};

/// Pre-norm residual self-attention stack. `additive_mask` (NxN), when given,
/// is added to every layer's logits; -inf entries exclude a key exactly, with
/// results bitwise equal to running the stack with those keys absent (rows
/// are computed independently and excluded keys contribute exact zeros).
void init_self_attention(ParamStore& ps, const std::string& prefix, const AttentionConfig& cfg,
                         RngStream& rng);
Tensor self_attention(const ParamStore& ps, const std::string& prefix, const AttentionConfig& cfg,
                      const Tensor& x, const Tensor* additive_mask = nullptr,
                      AttentionDebug* debug = nullptr);

/// Pre-norm residual cross-attention stack: queries update layer by layer,
/// keys/values come from `kv` (re-normalized per layer, never updated).
void init_cross_attention(ParamStore& ps, const std::string& prefix, const AttentionConfig& cfg,
                          int kv_dim, RngStream& rng);
Tensor cross_attention(const ParamStore& ps, const std::string& prefix,
                       const AttentionConfig& cfg, const Tensor& x, const Tensor& kv,
                       AttentionDebug* debug = nullptr);

// ---- deformable grid attention ----

struct DeformableConfig {
    int dim = 64;
    int layers = 3;
    int points = 4;            ///< sampling points per query per layer
    double offset_scale = 0.1; ///< learned offsets span this fraction of the grid
    int ffn_mult = 2;
};

/// Pre-norm residual stack where each query samples the feature grid at
/// learned offsets around its reference point and blends the samples with
/// softmax weights. grid is (H*W)xC row-major, ref_points Nx2 continuous
/// cell coordinates (x = column, y = row). Debug captures the blend weights
/// (one NxP tensor per layer).
void init_deformable(ParamStore& ps, const std::string& prefix, const DeformableConfig& cfg,
                     int grid_channels, RngStream& rng);
Tensor deformable_attention(const ParamStore& ps, const std::string& prefix,
                            const DeformableConfig& cfg, const Tensor& x, const Tensor& grid,
                            int height, int width, const Tensor& ref_points,
                            AttentionDebug* debug = nullptr);

// ---- classification loss ----

/// Mean focal loss over rows: -alpha * (1 - p_t)^gamma * log p_t with p_t the
/// softmax probability of the target class.
Tensor focal_loss(const Tensor& logits, std::span<const int> targets, double gamma = 2.0,
                  double alpha = 0.25);

}  // namespace drivegen::nn
