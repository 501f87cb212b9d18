#pragma once

#include <span>

#include "drivegen/model.hpp"

namespace drivegen::model {

struct LossWeights {
    double traj = 1.0;    ///< trajectory reconstruction + ego safety
    double latent = 1.0;  ///< instance-to-future distribution matching
    double det = 1.0;     ///< agent detection
    double map = 1.0;     ///< map element reconstruction
};

/// Hinge margins (meters) for the differentiable ego-safety terms.
inline constexpr double kCollisionMargin = 0.5;
inline constexpr double kBoundaryMargin = 1.0;

struct LossTerms {
    nn::Tensor traj;
    nn::Tensor latent;
    nn::Tensor det;
    nn::Tensor map;
    nn::Tensor total;  ///< weighted sum, in declaration order
};

/// Hinge on the axis-aligned separation between the planned ego box and each
/// obstacle box, averaged over future steps and summed over obstacles.
/// plan is 1 x 2*steps in the model frame.
nn::Tensor collision_penalty(const nn::Tensor& plan,
                             const std::vector<std::vector<AabbObstacle>>& obstacles,
                             double ego_half_length, double ego_half_width);

/// Hinge on the signed offset from the nearest road boundary; boundaries are
/// drawn with the drivable side on their left, so offsets below the margin
/// mean the plan hugs or crosses the edge. Mean over steps; zero without
/// boundary polylines.
nn::Tensor boundary_penalty(const nn::Tensor& plan, std::span<const geom::Polyline> map_model);

/// 1 - cos of the angle between each plan step and the nearest lane divider
/// direction. Mean over steps; zero without divider polylines.
nn::Tensor heading_alignment_penalty(const nn::Tensor& plan,
                                     std::span<const geom::Polyline> map_model);

/// Assembles every term from one training forward. Each member stays a live
/// graph node, so callers can backprop total (or inspect parts).
LossTerms compute_losses(const TrainingForward& fwd, const LossWeights& w = {});

}  // namespace drivegen::model
