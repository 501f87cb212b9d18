#pragma once

#include <vector>

#include "drivegen/bev.hpp"
#include "drivegen/layers.hpp"
#include "drivegen/param_store.hpp"

namespace drivegen::model {

/// Number of distinct foreground agent classes; class logits carry one extra
/// background column at index kAgentClasses.
inline constexpr int kAgentClasses = 1;
/// Map heads decode 3 categories plus background at index 3.
inline constexpr int kMapClasses = 3;
/// Points per decoded map element.
inline constexpr int kMapPoints = 20;

struct TokenizerConfig {
    int dim = 64;         ///< token width D
    int map_tokens = 16;  ///< learned map queries
    int agent_slots = 16; ///< instance slots in addition to the ego row
    nn::AttentionConfig attn{.dim = 64, .heads = 4, .layers = 3, .ffn_mult = 2};
    nn::DeformableConfig deform{.dim = 64, .layers = 3, .points = 4, .offset_scale = 0.1,
                                .ffn_mult = 2};
};

/// Per-cell key/value features for map attention: raw channels plus an
/// 8-dim sinusoidal encoding of the cell position.
inline constexpr int kCellPosEncDims = 8;
nn::Tensor bev_cell_features(const scene::BevGrid& grid);

void init_tokenizer(nn::ParamStore& ps, const TokenizerConfig& cfg, RngStream& rng);

/// Learned map queries cross-attending over the cell features.
nn::Tensor encode_map_tokens(const nn::ParamStore& ps, const TokenizerConfig& cfg,
                             const nn::Tensor& cell_features,
                             nn::AttentionDebug* debug = nullptr);

/// Agent slot queries sampling the raw grid deformably around learned
/// reference points. Returns agent_slots x dim.
nn::Tensor encode_agent_tokens(const nn::ParamStore& ps, const TokenizerConfig& cfg,
                               const scene::BevGrid& grid,
                               nn::AttentionDebug* debug = nullptr);

/// Ego token from a learned embedding plus an encoding of the ego past
/// (model-frame positions of frames -kPastFrames..0, flattened).
nn::Tensor encode_ego_token(const nn::ParamStore& ps, const TokenizerConfig& cfg,
                            const geom::Trajectory& ego_past_model_frame);

/// Stacks [ego; agents] (ego is row 0) and runs self-attention over the
/// instances. When block_ego_key is set, agent rows cannot attend to the
/// ego key (the ego row still sees everyone).
nn::Tensor fuse_instances(const nn::ParamStore& ps, const TokenizerConfig& cfg,
                          const nn::Tensor& ego_token, const nn::Tensor& agent_tokens,
                          bool block_ego_key, nn::AttentionDebug* debug = nullptr);

/// Cross-attention of fused instances into the map tokens.
nn::Tensor inject_map(const nn::ParamStore& ps, const TokenizerConfig& cfg,
                      const nn::Tensor& instances, const nn::Tensor& map_tokens,
                      nn::AttentionDebug* debug = nullptr);

// ---- decode heads ----

/// Agent head over non-ego instance rows: per slot
/// [x, y, sin, cos, class logits...] (agent_slots x (4 + kAgentClasses + 1)).
nn::Tensor decode_agents_raw(const nn::ParamStore& ps, const nn::Tensor& instances);

struct AgentDetection {
    geom::Pose2 pose;                  ///< model-frame position + heading
    std::vector<double> class_logits;  ///< kAgentClasses + 1 entries
    int cls = 0;                       ///< argmax class (kAgentClasses = background)
    bool foreground = false;
};
std::vector<AgentDetection> decode_agents(const nn::Tensor& raw);

/// Map head: per map token kMapPoints model-frame points plus category
/// logits (map_tokens x (2*kMapPoints + kMapClasses + 1)).
nn::Tensor decode_map_raw(const nn::ParamStore& ps, const nn::Tensor& map_tokens);

struct MapElement {
    std::vector<geom::Vec2> points;    ///< exactly kMapPoints
    std::vector<double> class_logits;  ///< kMapClasses + 1 entries
    int cls = 0;
    bool foreground = false;
};
std::vector<MapElement> decode_map(const nn::Tensor& raw);

}  // namespace drivegen::model
