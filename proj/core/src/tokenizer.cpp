#include "drivegen/tokenizer.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "drivegen/check.hpp"

namespace drivegen::model {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Raw grid channels as a constant (H*W)xC tensor in the layout
// bilinear_sample expects.
nn::Tensor grid_tensor(const scene::BevGrid& grid) {
    return nn::Tensor(grid.cfg.cells * grid.cfg.cells, scene::kBevChannels, grid.data);
}

int head_width() { return 4 + kAgentClasses + 1; }
int map_head_width() { return 2 * kMapPoints + kMapClasses + 1; }

}  // namespace

nn::Tensor bev_cell_features(const scene::BevGrid& grid) {
    const int cells = grid.cfg.cells;
    std::vector<double> enc;
    enc.reserve(static_cast<size_t>(cells) * cells * kCellPosEncDims);
    const double tau = 2.0 * std::numbers::pi;
    for (int row = 0; row < cells; ++row) {
        for (int col = 0; col < cells; ++col) {
            const double u = (col + 0.5) / cells;
            const double v = (row + 0.5) / cells;
            enc.push_back(std::sin(0.5 * tau * u));
            enc.push_back(std::cos(0.5 * tau * u));
            enc.push_back(std::sin(tau * u));
            enc.push_back(std::cos(tau * u));
            enc.push_back(std::sin(0.5 * tau * v));
            enc.push_back(std::cos(0.5 * tau * v));
            enc.push_back(std::sin(tau * v));
            enc.push_back(std::cos(tau * v));
        }
    }
    const std::array<nn::Tensor, 2> parts{grid_tensor(grid),
                                          nn::Tensor(cells * cells, kCellPosEncDims, enc)};
    return nn::concat_cols(parts);
}

void init_tokenizer(nn::ParamStore& ps, const TokenizerConfig& cfg, RngStream& rng) {
    check_arg(cfg.dim > 0 && cfg.map_tokens > 0 && cfg.agent_slots > 0,
              "tokenizer sizes must be positive");
    check_arg(cfg.attn.dim == cfg.dim && cfg.deform.dim == cfg.dim,
              "attention width must match token width");

    ps.create_uniform("tok.map_query", cfg.map_tokens, cfg.dim, cfg.dim, rng);
    nn::init_cross_attention(ps, "tok.map_ca", cfg.attn, scene::kBevChannels + kCellPosEncDims,
                             rng);

    ps.create_uniform("tok.agent_query", cfg.agent_slots, cfg.dim, cfg.dim, rng);
    // Pre-sigmoid reference points; uniform(-2, 2) spreads the sigmoid over
    // roughly the central 3/4 of the grid and lands off the cell lattice.
    nn::Tensor& ref = ps.create("tok.agent_ref", cfg.agent_slots, 2);
    for (double& v : ref.mutable_values()) v = nn::round_f32(rng.uniform(-2.0, 2.0));
    nn::init_deformable(ps, "tok.agent_def", cfg.deform, scene::kBevChannels, rng);

    ps.create_uniform("tok.ego_embed", 1, cfg.dim, cfg.dim, rng);
    const std::array<int, 3> ego_dims{2 * (geom::kPastFrames + 1), cfg.dim, cfg.dim};
    nn::init_mlp(ps, "tok.ego_past", ego_dims, rng);

    nn::init_self_attention(ps, "tok.fuse", cfg.attn, rng);
    nn::init_cross_attention(ps, "tok.inject", cfg.attn, cfg.dim, rng);

    const std::array<int, 3> agent_head{cfg.dim, cfg.dim, head_width()};
    nn::init_mlp(ps, "tok.agent_head", agent_head, rng);
    const std::array<int, 3> map_head{cfg.dim, cfg.dim, map_head_width()};
    nn::init_mlp(ps, "tok.map_head", map_head, rng);
}

nn::Tensor encode_map_tokens(const nn::ParamStore& ps, const TokenizerConfig& cfg,
                             const nn::Tensor& cell_features, nn::AttentionDebug* debug) {
    check_arg(cell_features.cols() == scene::kBevChannels + kCellPosEncDims,
              "cell features have unexpected width");
    return nn::cross_attention(ps, "tok.map_ca", cfg.attn, ps.get("tok.map_query"), cell_features,
                               debug);
}

nn::Tensor encode_agent_tokens(const nn::ParamStore& ps, const TokenizerConfig& cfg,
                               const scene::BevGrid& grid, nn::AttentionDebug* debug) {
    const int cells = grid.cfg.cells;
    const nn::Tensor ref =
        nn::scale(nn::sigmoid(ps.get("tok.agent_ref")), static_cast<double>(cells - 1));
    return nn::deformable_attention(ps, "tok.agent_def", cfg.deform, ps.get("tok.agent_query"),
                                    grid_tensor(grid), cells, cells, ref, debug);
}

nn::Tensor encode_ego_token(const nn::ParamStore& ps, const TokenizerConfig& cfg,
                            const geom::Trajectory& ego_past_model_frame) {
    const auto& wps = ego_past_model_frame.waypoints;
    check_arg(static_cast<int>(wps.size()) == geom::kPastFrames + 1,
              "ego past must cover frames -kPastFrames..0");
    std::vector<double> flat;
    flat.reserve(wps.size() * 2);
    for (const auto& w : wps) {
        flat.push_back(w.x);
        flat.push_back(w.y);
    }
    const nn::Tensor past(1, static_cast<int>(flat.size()), flat);
    return nn::add(ps.get("tok.ego_embed"), nn::mlp(ps, "tok.ego_past", past));
}

nn::Tensor fuse_instances(const nn::ParamStore& ps, const TokenizerConfig& cfg,
                          const nn::Tensor& ego_token, const nn::Tensor& agent_tokens,
                          bool block_ego_key, nn::AttentionDebug* debug) {
    check_arg(ego_token.rows() == 1 && ego_token.cols() == cfg.dim, "ego token must be 1 x dim");
    check_arg(agent_tokens.cols() == cfg.dim, "agent tokens must be N x dim");
    const std::array<nn::Tensor, 2> rows{ego_token, agent_tokens};
    const nn::Tensor instances = nn::concat_rows(rows);
    if (!block_ego_key) {
        return nn::self_attention(ps, "tok.fuse", cfg.attn, instances, nullptr, debug);
    }
    const int n = instances.rows();
    std::vector<double> mask(static_cast<size_t>(n) * n, 0.0);
    for (int r = 1; r < n; ++r) mask[static_cast<size_t>(r) * n] = -kInf;
    const nn::Tensor mask_t(n, n, mask);
    return nn::self_attention(ps, "tok.fuse", cfg.attn, instances, &mask_t, debug);
}

nn::Tensor inject_map(const nn::ParamStore& ps, const TokenizerConfig& cfg,
                      const nn::Tensor& instances, const nn::Tensor& map_tokens,
                      nn::AttentionDebug* debug) {
    return nn::cross_attention(ps, "tok.inject", cfg.attn, instances, map_tokens, debug);
}

nn::Tensor decode_agents_raw(const nn::ParamStore& ps, const nn::Tensor& instances) {
    check_arg(instances.rows() >= 2, "instance set must hold the ego row plus agent slots");
    return nn::mlp(ps, "tok.agent_head", nn::slice_rows(instances, 1, instances.rows()));
}

std::vector<AgentDetection> decode_agents(const nn::Tensor& raw) {
    check_arg(raw.cols() == head_width(), "agent head output has unexpected width");
    std::vector<AgentDetection> out;
    out.reserve(raw.rows());
    for (int i = 0; i < raw.rows(); ++i) {
        AgentDetection d;
        d.pose = {raw.at(i, 0), raw.at(i, 1), std::atan2(raw.at(i, 2), raw.at(i, 3))};
        d.class_logits.resize(kAgentClasses + 1);
        int best = 0;
        for (int c = 0; c <= kAgentClasses; ++c) {
            d.class_logits[c] = raw.at(i, 4 + c);
            if (d.class_logits[c] > d.class_logits[best]) best = c;
        }
        d.cls = best;
        d.foreground = best < kAgentClasses;
        out.push_back(std::move(d));
    }
    return out;
}

nn::Tensor decode_map_raw(const nn::ParamStore& ps, const nn::Tensor& map_tokens) {
    return nn::mlp(ps, "tok.map_head", map_tokens);
}

std::vector<MapElement> decode_map(const nn::Tensor& raw) {
    check_arg(raw.cols() == map_head_width(), "map head output has unexpected width");
    std::vector<MapElement> out;
    out.reserve(raw.rows());
    for (int i = 0; i < raw.rows(); ++i) {
        MapElement e;
        e.points.reserve(kMapPoints);
        for (int p = 0; p < kMapPoints; ++p) {
            e.points.push_back({raw.at(i, 2 * p), raw.at(i, 2 * p + 1)});
        }
        e.class_logits.resize(kMapClasses + 1);
        int best = 0;
        for (int c = 0; c <= kMapClasses; ++c) {
            e.class_logits[c] = raw.at(i, 2 * kMapPoints + c);
            if (e.class_logits[c] > e.class_logits[best]) best = c;
        }
        e.cls = best;
        e.foreground = best < kMapClasses;
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace drivegen::model
