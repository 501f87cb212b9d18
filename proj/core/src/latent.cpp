#include "drivegen/latent.hpp"

#include <array>
#include <cmath>

#include "drivegen/check.hpp"

namespace drivegen::model {
namespace {

LatentGaussian split_gaussian(const nn::Tensor& enc, int latent) {
    LatentGaussian g;
    g.mu = nn::slice(enc, 0, enc.rows(), 0, latent);
    g.log_sigma = nn::clamp(nn::slice(enc, 0, enc.rows(), latent, 2 * latent), kLogSigmaMin,
                            kLogSigmaMax);
    return g;
}

nn::Tensor ones_col(int n) { return nn::Tensor::full(n, 1, 1.0); }

}  // namespace

void init_generator(nn::ParamStore& ps, const GenerationConfig& cfg, RngStream& rng) {
    check_arg(cfg.dim > 0 && cfg.latent > 0, "generator sizes must be positive");
    const int z2 = 2 * cfg.latent;
    const std::array<int, 3> fut{2 * geom::kFutureFrames, cfg.dim, z2};
    nn::init_mlp(ps, "gen.future_enc", fut, rng);
    const std::array<int, 3> inst{cfg.dim, cfg.dim, z2};
    nn::init_mlp(ps, "gen.instance_enc", inst, rng);
    nn::init_gru(ps, "gen.gru", cfg.latent, cfg.latent, rng);
    ps.create_uniform("gen.step_in", 1, cfg.latent, cfg.latent, rng);
    const std::array<int, 3> dec{cfg.latent, cfg.dim, 2};
    nn::init_mlp(ps, "gen.step_dec", dec, rng);
    const std::array<int, 3> whole{cfg.latent, cfg.dim, 2 * geom::kFutureFrames};
    nn::init_mlp(ps, "gen.whole_dec", whole, rng);
}

LatentGaussian encode_future(const nn::ParamStore& ps, const GenerationConfig& cfg,
                             const nn::Tensor& futures) {
    check_arg(futures.cols() == 2 * geom::kFutureFrames,
              "future encoding expects 2*kFutureFrames columns");
    return split_gaussian(nn::mlp(ps, "gen.future_enc", futures), cfg.latent);
}

LatentGaussian encode_instance(const nn::ParamStore& ps, const GenerationConfig& cfg,
                               const nn::Tensor& tokens) {
    check_arg(tokens.cols() == cfg.dim, "instance encoding expects dim columns");
    return split_gaussian(nn::mlp(ps, "gen.instance_enc", tokens), cfg.latent);
}

SampleMode sample_mode_from_string(const std::string& name) {
    if (name == "mean") return SampleMode::kMean;
    if (name == "sample") return SampleMode::kSample;
    throw InputError("unknown sample mode '" + name + "' (expected mean or sample)");
}

std::string to_string(SampleMode m) {
    return m == SampleMode::kMean ? "mean" : "sample";
}

nn::Tensor sample_latent(const LatentGaussian& g, SampleMode mode, RngStream* rng) {
    if (mode == SampleMode::kMean) return g.mu;
    check_arg(rng != nullptr, "sample mode needs an RNG stream");
    std::vector<double> eps(static_cast<size_t>(g.mu.rows()) * g.mu.cols());
    for (double& e : eps) e = rng->normal();
    const nn::Tensor noise(g.mu.rows(), g.mu.cols(), eps);
    return nn::add(g.mu, nn::mul(nn::exp(g.log_sigma), noise));
}

nn::Tensor kl_diag_gauss(const LatentGaussian& q, const LatentGaussian& p) {
    check_arg(q.mu.rows() == p.mu.rows() && q.mu.cols() == p.mu.cols(),
              "KL needs matching shapes");
    // Phrased around the log-sigma difference so KL(q, q) is exactly zero:
    // with identical operands every term vanishes bitwise (exp(0) == 1,
    // 0.5 - 0.5 == 0) instead of leaving exp(x)*exp(-x) rounding residue.
    const nn::Tensor d = nn::sub(q.log_sigma, p.log_sigma);
    const nn::Tensor ratio = nn::exp(nn::scale(d, 2.0));  // var_q / var_p
    const nn::Tensor inv_var_p = nn::exp(nn::scale(p.log_sigma, -2.0));
    const nn::Tensor quad = nn::mul(nn::square(nn::sub(q.mu, p.mu)), inv_var_p);
    const nn::Tensor per_dim = nn::add_scalar(
        nn::sub(nn::scale(nn::add(ratio, quad), 0.5), d), -0.5);
    // Row-wise sum via a ones column.
    return nn::matmul(per_dim, ones_col(q.mu.cols()));
}

std::vector<nn::Tensor> rollout(const nn::ParamStore& ps, const GenerationConfig& cfg,
                                const nn::Tensor& z, int steps) {
    check_arg(z.cols() == cfg.latent, "latent width mismatch");
    check_arg(steps > 0, "rollout needs at least one step");
    // Broadcast the learned step input over the instance rows.
    const nn::Tensor x = nn::matmul(ones_col(z.rows()), ps.get("gen.step_in"));
    std::vector<nn::Tensor> states;
    states.reserve(steps);
    nn::Tensor h = z;
    for (int t = 0; t < steps; ++t) {
        h = nn::gru_step(ps, "gen.gru", x, h);
        states.push_back(h);
    }
    return states;
}

nn::Tensor decode_waypoints(const nn::ParamStore& ps, const GenerationConfig& cfg,
                            std::span<const nn::Tensor> states) {
    check_arg(!states.empty(), "no states to decode");
    std::vector<nn::Tensor> waypoints;
    waypoints.reserve(states.size());
    nn::Tensor acc;
    for (const nn::Tensor& h : states) {
        check_arg(h.cols() == cfg.latent, "state width mismatch");
        const nn::Tensor step = nn::mlp(ps, "gen.step_dec", h);
        acc = acc.defined() ? nn::add(acc, step) : step;
        waypoints.push_back(acc);
    }
    return nn::concat_cols(waypoints);
}

nn::Tensor decode_whole_trajectory(const nn::ParamStore& ps, const GenerationConfig& cfg,
                                   const nn::Tensor& z) {
    check_arg(z.cols() == cfg.latent, "latent width mismatch");
    return nn::mlp(ps, "gen.whole_dec", z);
}

}  // namespace drivegen::model
