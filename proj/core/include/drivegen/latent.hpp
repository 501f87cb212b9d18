#pragma once

#include <span>
#include <string>
#include <vector>

#include "drivegen/geom.hpp"
#include "drivegen/layers.hpp"
#include "drivegen/param_store.hpp"

namespace drivegen::model {

struct GenerationConfig {
    int dim = 64;      ///< hidden width of the encoder/decoder stacks
    int latent = 128;  ///< latent width; the rollout state has the same width
};

/// log-sigma is clamped to this band inside the encoders, keeping variances
/// inside [e^-12, e^8].
inline constexpr double kLogSigmaMin = -6.0;
inline constexpr double kLogSigmaMax = 4.0;

/// Diagonal Gaussian over instance latents, one row per instance.
struct LatentGaussian {
    nn::Tensor mu;
    nn::Tensor log_sigma;
};

void init_generator(nn::ParamStore& ps, const GenerationConfig& cfg, RngStream& rng);

/// Posterior from ground-truth futures: N x 2*kFutureFrames, each row the
/// flattened egocentric waypoints (x1, y1, x2, y2, ...) of one instance.
LatentGaussian encode_future(const nn::ParamStore& ps, const GenerationConfig& cfg,
                             const nn::Tensor& futures);

/// Prior from fused instance tokens (N x dim).
LatentGaussian encode_instance(const nn::ParamStore& ps, const GenerationConfig& cfg,
                               const nn::Tensor& tokens);

enum class SampleMode { kMean, kSample };
SampleMode sample_mode_from_string(const std::string& name);  ///< "mean" | "sample"
std::string to_string(SampleMode m);

/// Mean mode returns mu; sample mode draws eps row-major and returns
/// mu + exp(log_sigma) * eps (the noise is constant, so gradients flow to
/// the distribution parameters). rng may be null in mean mode.
nn::Tensor sample_latent(const LatentGaussian& g, SampleMode mode, RngStream* rng);

/// Per-row KL(q || p) between diagonal Gaussians, N x 1.
nn::Tensor kl_diag_gauss(const LatentGaussian& q, const LatentGaussian& p);

/// Evolves the latent with a GRU whose step input is a learned constant,
/// returning the states after 1..steps updates (each N x latent).
std::vector<nn::Tensor> rollout(const nn::ParamStore& ps, const GenerationConfig& cfg,
                                const nn::Tensor& z, int steps);

/// Decodes a per-step offset from every state and accumulates the offsets
/// into egocentric waypoints (N x 2*steps, flattened like encode_future's
/// input).
nn::Tensor decode_waypoints(const nn::ParamStore& ps, const GenerationConfig& cfg,
                            std::span<const nn::Tensor> states);

/// One-shot head mapping the latent straight to all kFutureFrames waypoints,
/// bypassing the rollout (ablation path).
nn::Tensor decode_whole_trajectory(const nn::ParamStore& ps, const GenerationConfig& cfg,
                                   const nn::Tensor& z);

}  // namespace drivegen::model
