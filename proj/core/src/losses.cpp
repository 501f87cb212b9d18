#include "drivegen/losses.hpp"

#include <cmath>

#include "drivegen/check.hpp"

namespace drivegen::model {
namespace {

using nn::Tensor;

Tensor plan_coord(const Tensor& plan, int step, int axis) {
    return nn::slice(plan, 0, 1, 2 * step + axis, 2 * step + axis + 1);
}

Tensor zero_scalar() { return Tensor::zeros(1, 1); }

int plan_steps(const Tensor& plan) {
    check_arg(plan.rows() == 1 && plan.cols() % 2 == 0, "plan must be 1 x 2*steps");
    return plan.cols() / 2;
}

}  // namespace

Tensor collision_penalty(const Tensor& plan,
                         const std::vector<std::vector<AabbObstacle>>& obstacles,
                         double ego_half_length, double ego_half_width) {
    const int steps = plan_steps(plan);
    check_arg(obstacles.size() == static_cast<size_t>(steps),
              "need one obstacle list per plan step");
    Tensor acc = zero_scalar();
    for (int t = 0; t < steps; ++t) {
        const Tensor px = plan_coord(plan, t, 0);
        const Tensor py = plan_coord(plan, t, 1);
        for (const AabbObstacle& ob : obstacles[t]) {
            // Per-axis gaps; their max is the axis-aligned separation
            // (negative when the boxes overlap on both axes).
            const Tensor gx =
                nn::add_scalar(nn::abs(nn::add_scalar(px, -ob.cx)), -(ego_half_length + ob.hx));
            const Tensor gy =
                nn::add_scalar(nn::abs(nn::add_scalar(py, -ob.cy)), -(ego_half_width + ob.hy));
            const Tensor gap =
                nn::scale(nn::add(nn::add(gx, gy), nn::abs(nn::sub(gx, gy))), 0.5);
            acc = nn::add(acc, nn::relu(nn::add_scalar(nn::neg(gap), kCollisionMargin)));
        }
    }
    return nn::scale(acc, 1.0 / steps);
}

Tensor boundary_penalty(const Tensor& plan, std::span<const geom::Polyline> map_model) {
    const int steps = plan_steps(plan);
    Tensor acc = zero_scalar();
    int counted = 0;
    for (int t = 0; t < steps; ++t) {
        const geom::Vec2 p{plan.at(0, 2 * t), plan.at(0, 2 * t + 1)};
        const geom::NearestSegment ns =
            geom::nearest_segment(p, map_model, geom::MapCategory::kRoadBoundary);
        if (ns.polyline_index < 0) continue;
        const auto& pts = map_model[ns.polyline_index].points;
        const geom::Vec2 a = pts[ns.segment_index];
        const geom::Vec2 b = pts[ns.segment_index + 1];
        const double len = (b - a).norm();
        if (len == 0.0) continue;
        // Signed offset is linear in the waypoint once the segment is fixed.
        const Tensor off = nn::sub(
            nn::scale(nn::add_scalar(plan_coord(plan, t, 1), -a.y), (b.x - a.x) / len),
            nn::scale(nn::add_scalar(plan_coord(plan, t, 0), -a.x), (b.y - a.y) / len));
        acc = nn::add(acc, nn::relu(nn::add_scalar(nn::neg(off), kBoundaryMargin)));
        ++counted;
    }
    return counted > 0 ? nn::scale(acc, 1.0 / counted) : acc;
}

Tensor heading_alignment_penalty(const Tensor& plan, std::span<const geom::Polyline> map_model) {
    const int steps = plan_steps(plan);
    Tensor acc = zero_scalar();
    int counted = 0;
    for (int t = 0; t < steps; ++t) {
        const geom::Vec2 p{plan.at(0, 2 * t), plan.at(0, 2 * t + 1)};
        const geom::NearestSegment ns =
            geom::nearest_segment(p, map_model, geom::MapCategory::kLaneDivider);
        if (ns.polyline_index < 0) continue;
        const auto& pts = map_model[ns.polyline_index].points;
        const geom::Vec2 dir = pts[ns.segment_index + 1] - pts[ns.segment_index];
        const double len = dir.norm();
        if (len == 0.0) continue;
        const Tensor dx = t == 0 ? plan_coord(plan, 0, 0)
                                 : nn::sub(plan_coord(plan, t, 0), plan_coord(plan, t - 1, 0));
        const Tensor dy = t == 0 ? plan_coord(plan, 0, 1)
                                 : nn::sub(plan_coord(plan, t, 1), plan_coord(plan, t - 1, 1));
        const Tensor num = nn::add(nn::scale(dx, dir.x / len), nn::scale(dy, dir.y / len));
        const Tensor den =
            nn::sqrt(nn::add_scalar(nn::add(nn::square(dx), nn::square(dy)), 1e-12));
        acc = nn::add(acc, nn::add_scalar(nn::neg(nn::div(num, den)), 1.0));
        ++counted;
    }
    return counted > 0 ? nn::scale(acc, 1.0 / counted) : acc;
}

LossTerms compute_losses(const TrainingForward& fwd, const LossWeights& w) {
    LossTerms out;

    const Tensor plan = nn::slice(fwd.pred_futures, 0, 1, 0, fwd.pred_futures.cols());
    out.traj = nn::mean(nn::abs(nn::sub(fwd.pred_futures, fwd.gt_futures)));
    out.traj = nn::add(out.traj, collision_penalty(plan, fwd.obstacles, fwd.ego_half_length,
                                                   fwd.ego_half_width));
    out.traj = nn::add(out.traj, boundary_penalty(plan, fwd.map_model));
    out.traj = nn::add(out.traj, heading_alignment_penalty(plan, fwd.map_model));

    out.latent = nn::mean(kl_diag_gauss(fwd.instance_dist, fwd.future_dist));

    Tensor det_l1 = zero_scalar();
    if (!fwd.det_rows.empty()) {
        const Tensor sel = nn::rows_at(fwd.agent_raw, fwd.det_rows);
        det_l1 = nn::mean(nn::abs(nn::sub(nn::slice(sel, 0, sel.rows(), 0, 4), fwd.det_target)));
    }
    const Tensor slot_logits =
        nn::slice(fwd.agent_raw, 0, fwd.agent_raw.rows(), 4, fwd.agent_raw.cols());
    out.det = nn::add(det_l1, nn::focal_loss(slot_logits, fwd.slot_class_target));

    Tensor map_l1 = zero_scalar();
    if (!fwd.map_rows.empty()) {
        const Tensor sel = nn::rows_at(fwd.map_raw, fwd.map_rows);
        map_l1 = nn::mean(nn::abs(
            nn::sub(nn::slice(sel, 0, sel.rows(), 0, 2 * kMapPoints), fwd.map_target)));
    }
    const Tensor map_logits =
        nn::slice(fwd.map_raw, 0, fwd.map_raw.rows(), 2 * kMapPoints, fwd.map_raw.cols());
    out.map = nn::add(map_l1, nn::focal_loss(map_logits, fwd.map_class_target));

    out.total = nn::add(
        nn::add(nn::add(nn::scale(out.traj, w.traj), nn::scale(out.latent, w.latent)),
                nn::scale(out.det, w.det)),
        nn::scale(out.map, w.map));
    return out;
}

}  // namespace drivegen::model
