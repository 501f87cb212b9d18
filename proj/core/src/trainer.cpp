#include "drivegen/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "drivegen/check.hpp"
#include "drivegen/checkpoint.hpp"

namespace drivegen::train {
namespace {

std::vector<int> shuffled_order(int n, uint64_t seed, int epoch) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    RngStream rng(RngStream::mix(seed, static_cast<uint64_t>(epoch)));
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(0, i));
        std::swap(order[i], order[j]);
    }
    return order;
}

void require_finite_term(const nn::Tensor& t, const char* name, const scene::Scene& s) {
    if (std::isfinite(t.item())) return;
    throw StateError(std::string("non-finite ") + name + " loss on scene " +
                     std::to_string(s.id));
}

}  // namespace

TrainResult train(nn::ParamStore& ps, nn::AdamWState& opt, const model::ModelConfig& mc,
                  const TrainConfig& cfg, std::span<const scene::Scene> scenes,
                  const EpochCallback& on_epoch) {
    check_arg(!scenes.empty(), "training needs at least one scene");
    check_arg(cfg.epochs > 0, "epoch count must be positive");
    check_arg(cfg.base_lr > 0.0, "learning rate must be positive");
    const int n = static_cast<int>(scenes.size());
    check_arg(opt.step % n == 0, "optimizer step count is not an epoch boundary");
    const int start_epoch = static_cast<int>(opt.step / n);
    check_arg(start_epoch <= cfg.epochs, "checkpoint already trained past this config");
    const int64_t total_steps = static_cast<int64_t>(cfg.epochs) * n;

    // Rasters never change during training; build them once.
    std::vector<scene::BevGrid> grids;
    grids.reserve(scenes.size());
    for (const auto& s : scenes) grids.push_back(model_grid(s, mc));

    TrainResult result;
    result.steps = opt.step;
    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const std::vector<int> order = shuffled_order(n, cfg.seed, epoch);
        EpochLog log;
        log.epoch = epoch;
        const uint64_t epoch_key = RngStream::mix(cfg.seed, static_cast<uint64_t>(epoch));
        for (int i = 0; i < n; ++i) {
            const scene::Scene& s = scenes[order[i]];
            RngStream noise(RngStream::mix(epoch_key, static_cast<uint64_t>(i) + 1));
            ps.zero_grad();
            const model::TrainingForward fwd = model::run_training_forward(
                ps, mc, cfg.variant, s, grids[order[i]], cfg.teacher_mode, &noise);
            const model::LossTerms lt = model::compute_losses(fwd, cfg.weights);
            require_finite_term(lt.traj, "trajectory", s);
            require_finite_term(lt.latent, "latent", s);
            require_finite_term(lt.det, "detection", s);
            require_finite_term(lt.map, "map", s);
            nn::backward(lt.total);
            log.lr = nn::cosine_lr(cfg.base_lr, opt.step, total_steps);
            nn::adamw_step(ps, opt, cfg.adamw, log.lr);
            log.traj += lt.traj.item();
            log.latent += lt.latent.item();
            log.det += lt.det.item();
            log.map += lt.map.item();
            log.total += lt.total.item();
        }
        log.traj /= n;
        log.latent /= n;
        log.det /= n;
        log.map /= n;
        log.total /= n;
        result.history.push_back(log);
        result.steps = opt.step;

        // Persist before notifying, so a callback can rely on the file being there.
        if (!cfg.checkpoint_path.empty()) {
            const bool last = epoch + 1 == cfg.epochs;
            const bool periodic =
                cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0;
            if (last || periodic) {
                nn::save_checkpoint(cfg.checkpoint_path, ps, cfg.config_echo_json, cfg.seed,
                                    &opt);
            }
        }
        if (on_epoch) on_epoch(log);
    }
    return result;
}

}  // namespace drivegen::train
