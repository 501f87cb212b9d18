#include "drivegen/layers.hpp"

#include <cmath>

#include "drivegen/check.hpp"

namespace drivegen::nn {

namespace {

std::string idx(const std::string& prefix, int i) { return prefix + "." + std::to_string(i); }

}  // namespace

// ---- linear / MLP ----

void init_linear(ParamStore& ps, const std::string& prefix, int in, int out, RngStream& rng) {
    ps.create_uniform(prefix + ".weight", in, out, in, rng);
    ps.create_uniform(prefix + ".bias", 1, out, in, rng);
}

Tensor linear(const ParamStore& ps, const std::string& prefix, const Tensor& x) {
    const Tensor& w = ps.get(prefix + ".weight");
    check_arg(x.cols() == w.rows(), "linear \"" + prefix + "\": input width " +
              std::to_string(x.cols()) + " != " + std::to_string(w.rows()));
    return add_rowvec(matmul(x, w), ps.get(prefix + ".bias"));
}

void init_mlp(ParamStore& ps, const std::string& prefix, std::span<const int> dims,
              RngStream& rng) {
    check_arg(dims.size() >= 2, "init_mlp \"" + prefix + "\": need at least two dims");
    for (size_t i = 0; i + 1 < dims.size(); ++i)
        init_linear(ps, idx(prefix, static_cast<int>(i)), dims[i], dims[i + 1], rng);
}

Tensor mlp(const ParamStore& ps, const std::string& prefix, const Tensor& x) {
    check_arg(ps.contains(idx(prefix, 0) + ".weight"), "mlp \"" + prefix + "\": no layers");
    Tensor h = x;
    for (int i = 0; ps.contains(idx(prefix, i) + ".weight"); ++i) {
        h = linear(ps, idx(prefix, i), h);
        if (ps.contains(idx(prefix, i + 1) + ".weight")) h = tanh(h);
    }
    return h;
}

// ---- layer norm ----

void init_layer_norm(ParamStore& ps, const std::string& prefix, int dim) {
    ps.create_const(prefix + ".gain", 1, dim, 1.0);
    ps.create(prefix + ".bias", 1, dim);
}

Tensor layer_norm(const ParamStore& ps, const std::string& prefix, const Tensor& x) {
    return layer_norm_rows(x, ps.get(prefix + ".gain"), ps.get(prefix + ".bias"));
}

// ---- GRU ----

void init_gru(ParamStore& ps, const std::string& prefix, int in, int hidden, RngStream& rng) {
    for (const char* gate : {"z", "r", "n"}) {
        ps.create_uniform(prefix + ".w" + gate, in, hidden, in, rng);
        ps.create_uniform(prefix + ".u" + gate, hidden, hidden, hidden, rng);
        ps.create_uniform(prefix + ".b" + gate, 1, hidden, hidden, rng);
    }
}

Tensor gru_step(const ParamStore& ps, const std::string& prefix, const Tensor& x,
                const Tensor& h) {
    check_arg(x.rows() == h.rows(), "gru_step \"" + prefix + "\": batch mismatch");
    const Tensor z = sigmoid(add_rowvec(matmul(x, ps.get(prefix + ".wz")) +
                                        matmul(h, ps.get(prefix + ".uz")),
                                        ps.get(prefix + ".bz")));
    const Tensor r = sigmoid(add_rowvec(matmul(x, ps.get(prefix + ".wr")) +
                                        matmul(h, ps.get(prefix + ".ur")),
                                        ps.get(prefix + ".br")));
    const Tensor n = tanh(add_rowvec(matmul(x, ps.get(prefix + ".wn")) +
                                     r * matmul(h, ps.get(prefix + ".un")),
                                     ps.get(prefix + ".bn")));
    const Tensor one = Tensor::full(h.rows(), h.cols(), 1.0);
    return (one - z) * n + z * h;
}

// ---- attention ----

namespace {

void init_attention_layer(ParamStore& ps, const std::string& lp, int dim, int kv_dim,
                          int ffn_mult, bool with_kv_norm, RngStream& rng) {
    init_layer_norm(ps, lp + ".ln", dim);
    if (with_kv_norm) init_layer_norm(ps, lp + ".ln_kv", kv_dim);
    init_linear(ps, lp + ".q", dim, dim, rng);
    init_linear(ps, lp + ".k", kv_dim, dim, rng);
    init_linear(ps, lp + ".v", kv_dim, dim, rng);
    init_linear(ps, lp + ".o", dim, dim, rng);
    init_layer_norm(ps, lp + ".ffn_ln", dim);
    const int dims[3] = {dim, ffn_mult * dim, dim};
    init_mlp(ps, lp + ".ffn", dims, rng);
}

/// One multi-head attention application: queries and keys/values are already
/// normalized. Rows are computed independently; a -inf mask entry excludes a
/// key with an exact-zero contribution.
Tensor mha_core(const ParamStore& ps, const std::string& lp, int heads, const Tensor& qn,
                const Tensor& kvn, const Tensor* mask, AttentionDebug* debug) {
    const Tensor q = linear(ps, lp + ".q", qn);
    const Tensor k = linear(ps, lp + ".k", kvn);
    const Tensor v = linear(ps, lp + ".v", kvn);
    const int dim = q.cols();
    check_arg(dim % heads == 0, "attention: dim " + std::to_string(dim) +
              " not divisible by heads " + std::to_string(heads));
    const int dh = dim / heads;
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));

    std::vector<Tensor> head_out;
    head_out.reserve(heads);
    for (int hi = 0; hi < heads; ++hi) {
        const Tensor qi = slice(q, 0, q.rows(), hi * dh, (hi + 1) * dh);
        const Tensor ki = slice(k, 0, k.rows(), hi * dh, (hi + 1) * dh);
        const Tensor vi = slice(v, 0, v.rows(), hi * dh, (hi + 1) * dh);
        const Tensor logits = scale(matmul_transb(qi, ki), inv_scale);
        const Tensor weights = softmax_rows(logits, mask);
        if (debug) debug->weights.push_back(weights);
        head_out.push_back(matmul(weights, vi));
    }
    return linear(ps, lp + ".o", concat_cols(head_out));
}

}  // namespace

void init_self_attention(ParamStore& ps, const std::string& prefix, const AttentionConfig& cfg,
                         RngStream& rng) {
    for (int l = 0; l < cfg.layers; ++l)
        init_attention_layer(ps, idx(prefix, l), cfg.dim, cfg.dim, cfg.ffn_mult,
                             /*with_kv_norm=*/false, rng);
}

Tensor self_attention(const ParamStore& ps, const std::string& prefix, const AttentionConfig& cfg,
                      const Tensor& x, const Tensor* additive_mask, AttentionDebug* debug) {
    check_arg(x.cols() == cfg.dim, "self_attention \"" + prefix + "\": token width mismatch");
    Tensor h = x;
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string lp = idx(prefix, l);
        const Tensor hn = layer_norm(ps, lp + ".ln", h);
        h = h + mha_core(ps, lp, cfg.heads, hn, hn, additive_mask, debug);
        h = h + mlp(ps, lp + ".ffn", layer_norm(ps, lp + ".ffn_ln", h));
    }
    return h;
}

void init_cross_attention(ParamStore& ps, const std::string& prefix, const AttentionConfig& cfg,
                          int kv_dim, RngStream& rng) {
    for (int l = 0; l < cfg.layers; ++l)
        init_attention_layer(ps, idx(prefix, l), cfg.dim, kv_dim, cfg.ffn_mult,
                             /*with_kv_norm=*/true, rng);
}

Tensor cross_attention(const ParamStore& ps, const std::string& prefix,
                       const AttentionConfig& cfg, const Tensor& x, const Tensor& kv,
                       AttentionDebug* debug) {
    check_arg(x.cols() == cfg.dim, "cross_attention \"" + prefix + "\": query width mismatch");
    Tensor h = x;
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string lp = idx(prefix, l);
        const Tensor qn = layer_norm(ps, lp + ".ln", h);
        const Tensor kvn = layer_norm(ps, lp + ".ln_kv", kv);
        h = h + mha_core(ps, lp, cfg.heads, qn, kvn, nullptr, debug);
        h = h + mlp(ps, lp + ".ffn", layer_norm(ps, lp + ".ffn_ln", h));
    }
    return h;
}

// ---- deformable grid attention ----

void init_deformable(ParamStore& ps, const std::string& prefix, const DeformableConfig& cfg,
                     int grid_channels, RngStream& rng) {
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string lp = idx(prefix, l);
        init_layer_norm(ps, lp + ".ln", cfg.dim);
        init_linear(ps, lp + ".offset", cfg.dim, 2 * cfg.points, rng);
        init_linear(ps, lp + ".blend", cfg.dim, cfg.points, rng);
        init_linear(ps, lp + ".vproj", grid_channels, cfg.dim, rng);
        init_linear(ps, lp + ".out", cfg.dim, cfg.dim, rng);
        init_layer_norm(ps, lp + ".ffn_ln", cfg.dim);
        const int dims[3] = {cfg.dim, cfg.ffn_mult * cfg.dim, cfg.dim};
        init_mlp(ps, lp + ".ffn", dims, rng);
    }
}

Tensor deformable_attention(const ParamStore& ps, const std::string& prefix,
                            const DeformableConfig& cfg, const Tensor& x, const Tensor& grid,
                            int height, int width, const Tensor& ref_points,
                            AttentionDebug* debug) {
    check_arg(x.cols() == cfg.dim, "deformable_attention \"" + prefix + "\": width mismatch");
    check_arg(ref_points.rows() == x.rows() && ref_points.cols() == 2,
              "deformable_attention \"" + prefix + "\": ref_points must be Nx2");
    check_arg(grid.rows() == height * width,
              "deformable_attention \"" + prefix + "\": grid rows != H*W");
    const int n = x.rows();
    const double span = cfg.offset_scale * (std::max(height, width) - 1);

    Tensor h = x;
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string lp = idx(prefix, l);
        const Tensor hn = layer_norm(ps, lp + ".ln", h);
        const Tensor offsets = scale(linear(ps, lp + ".offset", hn), span);
        const Tensor blend = softmax_rows(linear(ps, lp + ".blend", hn));
        if (debug) debug->weights.push_back(blend);
        const Tensor vgrid = linear(ps, lp + ".vproj", grid);

        Tensor acc;
        for (int p = 0; p < cfg.points; ++p) {
            const Tensor pts = ref_points + slice(offsets, 0, n, 2 * p, 2 * p + 2);
            const Tensor sampled = bilinear_sample(vgrid, height, width, pts);
            const Tensor term = mul_colvec(sampled, slice(blend, 0, n, p, p + 1));
            acc = acc.defined() ? acc + term : term;
        }
        h = h + linear(ps, lp + ".out", acc);
        h = h + mlp(ps, lp + ".ffn", layer_norm(ps, lp + ".ffn_ln", h));
    }
    return h;
}

// ---- classification loss ----

Tensor focal_loss(const Tensor& logits, std::span<const int> targets, double gamma, double alpha) {
    check_arg(static_cast<int>(targets.size()) == logits.rows(),
              "focal_loss: need one target per row");
    check_arg(logits.rows() > 0, "focal_loss: empty batch");
    const Tensor logp = log_softmax_rows(logits);
    const Tensor logpt = gather_per_row(logp, targets);
    const Tensor pt = exp(logpt);
    const Tensor one = Tensor::full(pt.rows(), 1, 1.0);
    const Tensor focal = pow_const(one - pt, gamma) * logpt;
    return scale(mean(focal), -alpha);
}

}  // namespace drivegen::nn
