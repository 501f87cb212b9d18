// Acceptance gate: ten end-to-end checks over the whole stack, printed as
// one PASS/FAIL line each. Everything is deterministic; tolerances are
// pinned next to each check.
//
// Checks 6 and 7 train the full model at its default scale three times per
// variant and dominate the runtime (roughly 1.5 h single-threaded). Pass
// criterion numbers as arguments to run a subset during development:
//     acceptance 1 2 3 4 5 8 9 10
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "drivegen/checkpoint.hpp"
#include "drivegen/config.hpp"
#include "drivegen/geom.hpp"
#include "drivegen/latent.hpp"
#include "drivegen/layers.hpp"
#include "drivegen/losses.hpp"
#include "drivegen/matching.hpp"
#include "drivegen/metrics.hpp"
#include "drivegen/model.hpp"
#include "drivegen/rng.hpp"
#include "drivegen/scene_gen.hpp"
#include "drivegen/tensor.hpp"
#include "drivegen/trainer.hpp"

using namespace drivegen;
using Clock = std::chrono::steady_clock;

namespace {

double secs_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

void progress(const std::string& line) {
    std::fprintf(stderr, "    %s\n", line.c_str());
    std::fflush(stderr);
}

/// Small but structurally complete model: every head, layer and loss term
/// is exercised, just at widths where a forward takes about a millisecond.
config::RunConfig small_run_config() {
    config::RunConfig rc;
    config::set_model_dim(rc.model, 16);
    rc.model.tokenizer.map_tokens = 4;
    rc.model.tokenizer.agent_slots = 6;
    rc.model.tokenizer.attn.heads = 2;
    rc.model.tokenizer.attn.layers = 1;
    rc.model.tokenizer.deform.layers = 1;
    rc.model.tokenizer.deform.points = 2;
    rc.model.generation.latent = 8;
    rc.model.bev.cells = 8;
    return rc;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// 1. Finite-difference check of the full training objective.

Outcome criterion_gradients() {
    const auto t0 = Clock::now();
    const config::RunConfig rc = small_run_config();

    // A scene with at least two supervised agents, so the detection,
    // trajectory and latent paths all carry real gradient.
    nn::ParamStore ps;
    {
        RngStream init(77);
        model::init_model(ps, rc.model, init);
    }

    // The objective is piecewise smooth: the agent and map assignments are
    // argmins, and finite differences are only meaningful while they hold
    // still. Evaluations therefore carry the discrete structure alongside
    // the loss, probes that cross an assignment boundary are skipped, and
    // the scene itself is chosen so that a perturbation scan leaves the
    // structure untouched (a scene can land exactly on a tie).
    struct Eval {
        double loss = 0.0;
        std::vector<int> structure;
    };
    const scene::Scene* chosen = nullptr;
    scene::BevGrid grid;
    auto evaluate = [&](const nn::ParamStore& store) {
        RngStream rng(901);  // identical teacher noise on every call
        const auto fwd = model::run_training_forward(store, rc.model, model::Variant::kFull,
                                                     *chosen, grid, model::SampleMode::kSample,
                                                     &rng);
        Eval e;
        e.loss = model::compute_losses(fwd).total.values()[0];
        e.structure = fwd.det_rows;
        e.structure.insert(e.structure.end(), fwd.map_rows.begin(), fwd.map_rows.end());
        e.structure.insert(e.structure.end(), fwd.map_class_target.begin(),
                           fwd.map_class_target.end());
        e.structure.insert(e.structure.end(), fwd.slot_class_target.begin(),
                           fwd.slot_class_target.end());
        return e;
    };
    const double h = 1e-5;
    const auto candidates = scene::generate_dataset(rc.scene_gen, 4, 0, 8);
    const auto names = ps.names();
    for (const auto& s : candidates) {
        chosen = &s;
        grid = model::model_grid(s, rc.model);
        RngStream rng(901);
        const auto fwd = model::run_training_forward(ps, rc.model, model::Variant::kFull, s,
                                                     grid, model::SampleMode::kSample, &rng);
        if (fwd.det_rows.size() < 2) {
            chosen = nullptr;
            continue;
        }
        const Eval base = evaluate(ps);
        bool stable = true;
        for (size_t k = 0; k < names.size() && stable; k += 5) {
            nn::Tensor& t = ps.get(names[k]);
            const double saved = t.values()[0];
            for (double delta : {h, -h}) {
                t.mutable_values()[0] = saved + delta;
                if (evaluate(ps).structure != base.structure) stable = false;
                t.mutable_values()[0] = saved;
            }
        }
        if (stable) break;
        chosen = nullptr;
    }
    if (!chosen) return {false, "no scene with two supervised agents and stable matchings"};

    ps.zero_grad();
    const Eval base = evaluate(ps);
    {
        RngStream rng(901);
        const auto fwd = model::run_training_forward(ps, rc.model, model::Variant::kFull,
                                                     *chosen, grid, model::SampleMode::kSample,
                                                     &rng);
        auto lt = model::compute_losses(fwd);
        nn::backward(lt.total);
    }

    double max_rel = 0.0;
    int probes = 0, skipped = 0;
    struct Probe {
        double err, analytic, fd;
        std::string name;
        int index;
    };
    std::vector<Probe> worst;
    for (const auto& name : names) {
        nn::Tensor& t = ps.get(name);
        const int n = t.size();
        // First, middle and last element of every tensor.
        std::set<int> idx = {0, n / 2, n - 1};
        for (int i : idx) {
            const double analytic = t.grad()[i];
            const double saved = t.values()[i];
            t.mutable_values()[i] = saved + h;
            const Eval up = evaluate(ps);
            t.mutable_values()[i] = saved - h;
            const Eval down = evaluate(ps);
            t.mutable_values()[i] = saved;
            if (up.structure != base.structure || down.structure != base.structure) {
                ++skipped;
                continue;
            }
            const double fd = (up.loss - down.loss) / (2.0 * h);
            // Relative where the gradient is meaningful; the 1e-2 floor turns
            // the check absolute for near-zero gradients, where the quotient
            // would measure finite-difference noise instead of the backward
            // pass.
            const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-2});
            const double err = std::fabs(analytic - fd) / denom;
            max_rel = std::max(max_rel, err);
            worst.push_back({err, analytic, fd, name, i});
            ++probes;
        }
    }
    std::sort(worst.begin(), worst.end(), [](const Probe& a, const Probe& b) {
        return a.err > b.err;
    });
    for (size_t i = 0; i < worst.size() && worst[i].err >= 1e-4; ++i)
        progress(fmt("gradient mismatch: %s[%d] analytic %.6e fd %.6e", worst[i].name.c_str(),
                     worst[i].index, worst[i].analytic, worst[i].fd));
    const double elapsed = secs_since(t0);
    const bool pass = max_rel < 1e-4 && elapsed < 30.0 && probes > 200;
    return {pass, fmt("max rel err %.2e over %d probes (tol 1e-4, %d at boundaries skipped), "
                      "%.1f s (limit 30)",
                      max_rel, probes, skipped, elapsed)};
}

// ---------------------------------------------------------------------------
// 2. KL closed form against numerical quadrature, identity, nonnegativity.

double kl_value(const std::vector<double>& mu_q, const std::vector<double>& ls_q,
                const std::vector<double>& mu_p, const std::vector<double>& ls_p) {
    model::LatentGaussian q{nn::Tensor::row(mu_q), nn::Tensor::row(ls_q)};
    model::LatentGaussian p{nn::Tensor::row(mu_p), nn::Tensor::row(ls_p)};
    return model::kl_diag_gauss(q, p).values()[0];
}

// One-dimensional KL via Simpson's rule over q's support.
double kl_quadrature_1d(double mu_q, double ls_q, double mu_p, double ls_p) {
    const double sq = std::exp(ls_q), sp = std::exp(ls_p);
    const double smax = std::max(sq, sp);
    const double lo = std::min(mu_q, mu_p) - 14.0 * smax;
    const double hi = std::max(mu_q, mu_p) + 14.0 * smax;
    const int n = 40000;  // even
    const double dx = (hi - lo) / n;
    auto integrand = [&](double x) {
        const double zq = (x - mu_q) / sq, zp = (x - mu_p) / sp;
        const double log_q = -0.5 * zq * zq - ls_q;
        const double log_p = -0.5 * zp * zp - ls_p;
        const double qpdf = std::exp(log_q) / std::sqrt(2.0 * M_PI);
        return qpdf * (log_q - log_p);
    };
    double acc = integrand(lo) + integrand(hi);
    for (int i = 1; i < n; ++i) acc += integrand(lo + i * dx) * (i % 2 ? 4.0 : 2.0);
    return acc * dx / 3.0;
}

Outcome criterion_kl() {
    RngStream r(2001);
    const int dims = 3;
    double max_err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> mq(dims), lq(dims), mp(dims), lp(dims);
        double reference = 0.0;
        for (int d = 0; d < dims; ++d) {
            mq[d] = r.uniform(-3.0, 3.0);
            lq[d] = r.uniform(-1.5, 1.5);
            mp[d] = r.uniform(-3.0, 3.0);
            lp[d] = r.uniform(-1.5, 1.5);
            reference += kl_quadrature_1d(mq[d], lq[d], mp[d], lp[d]);
        }
        max_err = std::max(max_err, std::fabs(kl_value(mq, lq, mp, lp) - reference));
    }

    int self_nonzero = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> m(dims), l(dims);
        for (int d = 0; d < dims; ++d) {
            m[d] = r.uniform(-3.0, 3.0);
            l[d] = r.uniform(-1.5, 1.5);
        }
        if (kl_value(m, l, m, l) != 0.0) ++self_nonzero;
    }

    int negative = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<double> mq(dims), lq(dims), mp(dims), lp(dims);
        for (int d = 0; d < dims; ++d) {
            mq[d] = r.uniform(-4.0, 4.0);
            lq[d] = r.uniform(-2.0, 2.0);
            mp[d] = r.uniform(-4.0, 4.0);
            lp[d] = r.uniform(-2.0, 2.0);
        }
        if (kl_value(mq, lq, mp, lp) < 0.0) ++negative;
    }

    const bool pass = max_err < 1e-6 && self_nonzero == 0 && negative == 0;
    return {pass, fmt("quadrature err %.2e (tol 1e-6), KL(q,q)!=0: %d/100, negative: %d/10000",
                      max_err, self_nonzero, negative)};
}

// ---------------------------------------------------------------------------
// 3. Assignment solver against exhaustive search.

Outcome criterion_matching() {
    RngStream r(3001);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 6;
        std::vector<double> cost(n * n);
        for (double& c : cost) c = r.uniform_int(0, 99);

        const model::Assignment got = model::hungarian_match(cost, n, n);

        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e18;
        do {
            double total = 0.0;
            for (int row = 0; row < n; ++row) total += cost[row * n + perm[row]];
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));

        // Integer costs, so optimal totals must agree exactly.
        double got_total = 0.0;
        for (int row = 0; row < n; ++row) got_total += cost[row * n + got.row_to_col[row]];
        if (got_total != best || got.total_cost != best) ++mismatches;
    }
    return {mismatches == 0, fmt("%d/100 random 6x6 assignments match the exhaustive optimum",
                                 100 - mismatches)};
}

// ---------------------------------------------------------------------------
// 4. Oriented-box overlap against dense point sampling.

geom::OrientedBox random_box(RngStream& r) {
    geom::OrientedBox b;
    b.center = {r.uniform(-5.0, 5.0), r.uniform(-5.0, 5.0), r.uniform(-M_PI, M_PI)};
    b.length = r.uniform(0.5, 6.0);
    b.width = r.uniform(0.3, 3.0);
    return b;
}

bool sampled_overlap_one_way(const geom::OrientedBox& a, const geom::OrientedBox& b) {
    const int steps = 200;
    const double cb = std::cos(b.center.heading), sb = std::sin(b.center.heading);
    const double ca = std::cos(a.center.heading), sa = std::sin(a.center.heading);
    for (int i = 0; i <= steps; ++i) {
        const double u = a.length * (static_cast<double>(i) / steps - 0.5);
        for (int j = 0; j <= steps; ++j) {
            const double v = a.width * (static_cast<double>(j) / steps - 0.5);
            const double wx = a.center.x + ca * u - sa * v;
            const double wy = a.center.y + sa * u + ca * v;
            const double dx = wx - b.center.x, dy = wy - b.center.y;
            const double bx = cb * dx + sb * dy;  // into b's frame
            const double by = -sb * dx + cb * dy;
            if (std::fabs(bx) <= b.length * 0.5 && std::fabs(by) <= b.width * 0.5) return true;
        }
    }
    return false;
}

Outcome criterion_boxes() {
    RngStream r(4001);
    int checked = 0, skipped = 0, wrong = 0;
    // The sampling grid's pitch is at most 6/200 = 0.03 m per axis; pairs
    // whose separation magnitude sits under 0.08 m are inside the oracle's
    // resolution band and are excluded rather than guessed at.
    const double band = 0.08;
    while (checked + skipped < 1000) {
        const geom::OrientedBox a = random_box(r);
        geom::OrientedBox b = random_box(r);
        // Pull half the pairs near each other so overlap actually occurs.
        if ((checked + skipped) % 2 == 0) {
            b.center.x = a.center.x + r.uniform(-3.0, 3.0);
            b.center.y = a.center.y + r.uniform(-3.0, 3.0);
        }
        if (std::fabs(geom::box_separation(a, b)) < band) {
            ++skipped;
            continue;
        }
        const bool sampled = sampled_overlap_one_way(a, b) || sampled_overlap_one_way(b, a);
        if (sampled != geom::boxes_overlap(a, b)) ++wrong;
        ++checked;
    }
    return {wrong == 0, fmt("%d disagreements over %d pairs (%d inside the 0.08 m band skipped)",
                            wrong, checked, skipped)};
}

// ---------------------------------------------------------------------------
// 5. Ground-truth plans score perfectly on generated scenes.

Outcome criterion_ground_truth() {
    const scene::SceneGenConfig cfg;
    const auto scenes = scene::generate_dataset(cfg, 2024, 0, 256);
    int l2_violations = 0, collisions = 0;
    for (const auto& s : scenes) {
        const auto gt = eval::ground_truth_plan(s);
        for (auto mode : {eval::MetricMode::kAtTimestep, eval::MetricMode::kFrameAveraged}) {
            const eval::PlanScore score = eval::score_plan(s, gt, mode);
            for (int hz = 0; hz < eval::kHorizons; ++hz) {
                if (score.l2[hz] != 0.0) ++l2_violations;
                if (score.collision[hz]) ++collisions;
            }
        }
    }
    return {l2_violations == 0 && collisions == 0,
            fmt("256 scenes: %d nonzero L2 entries, %d ground-truth collisions",
                l2_violations, collisions)};
}

// ---------------------------------------------------------------------------
// 6 + 7. Full-scale training: against the untrained model and constant
// velocity (6), and against the no-map-no-rollout variant (7). The three
// full-variant runs are shared between both checks.

std::array<double, 3> cv_l2_per_horizon(const scene::Scene& sc) {
    const auto cv = eval::constant_velocity_plan(sc);
    const auto gt = eval::ground_truth_plan(sc);
    std::array<double, 3> out{};
    for (int hz = 1; hz <= eval::kHorizons; ++hz) {
        const int k = eval::horizon_frame(hz) - 1;
        out[hz - 1] = std::hypot(cv[k].x - gt[k].x, cv[k].y - gt[k].y);
    }
    return out;
}

double median3(std::array<double, 3> v) {
    std::sort(v.begin(), v.end());
    return v[1];
}

std::pair<Outcome, Outcome> criteria_training() {
    const config::RunConfig rc;  // default scale: dim 64, latent 128, 40 epochs
    const auto train_set = scene::generate_dataset(rc.scene_gen, RngStream::mix(1000, 0), 0, 512);
    const auto held = scene::generate_dataset(rc.scene_gen, RngStream::mix(1000, 1), 100000, 64);

    // Curved-trajectory subset: scenes where constant velocity is off by
    // more than 0.5 m at 3 s (with constant-speed tracks that isolates
    // curvature). Constant velocity is near-exact on the rest.
    std::vector<scene::Scene> curved;
    double cv_curved_sum = 0.0;
    for (const auto& sc : held) {
        const auto cv = cv_l2_per_horizon(sc);
        if (cv[2] > 0.5) {
            curved.push_back(sc);
            cv_curved_sum += cv[2];
        }
    }
    const double cv_curved = cv_curved_sum / curved.size();

    std::array<double, 3> ratio{}, full_l2{}, full_curved{}, neither_l2{}, minutes{};
    const std::array<uint64_t, 3> seeds = {31, 32, 33};
    for (size_t i = 0; i < seeds.size(); ++i) {
        for (const model::Variant variant :
             {model::Variant::kFull, model::Variant::kNoMapNoRollout}) {
            nn::ParamStore ps;
            RngStream init(RngStream::mix(seeds[i], 7));
            model::init_model(ps, rc.model, init);

            double untrained = 0.0;
            if (variant == model::Variant::kFull) {
                untrained = eval::evaluate_dataset(ps, rc.model, variant, held,
                                                   eval::MetricMode::kAtTimestep,
                                                   model::SampleMode::kMean, 5)
                                .plan_l2[2];
            }

            train::TrainConfig tc = rc.train;
            tc.seed = seeds[i];
            tc.variant = variant;
            nn::AdamWState opt;
            const auto t0 = Clock::now();
            train::train(ps, opt, rc.model, tc, train_set, [&](const train::EpochLog& l) {
                if (l.epoch % 8 == 7)
                    progress(fmt("training seed %llu %s: epoch %d/%d, loss %.3f, %.0f s",
                                 static_cast<unsigned long long>(seeds[i]),
                                 model::to_string(variant).c_str(), l.epoch + 1, tc.epochs,
                                 l.total, secs_since(t0)));
            });

            const double trained = eval::evaluate_dataset(ps, rc.model, variant, held,
                                                          eval::MetricMode::kAtTimestep,
                                                          model::SampleMode::kMean, 5)
                                       .plan_l2[2];
            if (variant == model::Variant::kFull) {
                minutes[i] = secs_since(t0) / 60.0;
                ratio[i] = trained / untrained;
                full_l2[i] = trained;
                full_curved[i] = eval::evaluate_dataset(ps, rc.model, variant, curved,
                                                        eval::MetricMode::kAtTimestep,
                                                        model::SampleMode::kMean, 5)
                                     .plan_l2[2];
            } else {
                neither_l2[i] = trained;
            }
            progress(fmt("seed %llu %s done: held-out L2@3s %.3f m",
                         static_cast<unsigned long long>(seeds[i]),
                         model::to_string(variant).c_str(), trained));
        }
    }

    const double med_ratio = median3(ratio);
    const double med_curved = median3(full_curved);
    const double med_full = median3(full_l2);
    const double med_neither = median3(neither_l2);
    const double med_minutes = median3(minutes);

    Outcome six;
    six.pass = med_ratio < 0.5 && med_curved < cv_curved;
    six.detail = fmt("trained/untrained L2@3s %.3f (need <0.5); curved %.2f m vs CV %.2f m "
                     "(%zu scenes); %.1f min/run (20 min target)",
                     med_ratio, med_curved, cv_curved, curved.size(), med_minutes);

    Outcome seven;
    seven.pass = med_full < med_neither;
    seven.detail = fmt("held-out L2@3s: full %.3f m vs no-map-no-rollout %.3f m (medians of 3)",
                       med_full, med_neither);
    return {six, seven};
}

// ---------------------------------------------------------------------------
// 8. Key-blocked fusion equals attention with the ego row absent.

Outcome criterion_masking() {
    const config::RunConfig rc = small_run_config();
    nn::ParamStore ps;
    RngStream init(88);
    model::init_model(ps, rc.model, init);

    RngStream r(8001);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int agents = r.uniform_int(1, 6);
        const int dim = rc.model.tokenizer.dim;
        std::vector<double> ego_vals(dim), agent_vals(agents * dim);
        for (double& v : ego_vals) v = r.uniform(-1.0, 1.0);
        for (double& v : agent_vals) v = r.uniform(-1.0, 1.0);
        const nn::Tensor ego = nn::Tensor::row(ego_vals);
        const nn::Tensor agent_tokens(agents, dim, agent_vals);

        const nn::Tensor fused =
            model::fuse_instances(ps, rc.model.tokenizer, ego, agent_tokens, true);
        const nn::Tensor oracle =
            nn::self_attention(ps, "tok.fuse", rc.model.tokenizer.attn, agent_tokens);

        for (int row = 0; row < agents; ++row)
            for (int col = 0; col < dim; ++col)
                if (fused.values()[(row + 1) * dim + col] != oracle.values()[row * dim + col])
                    ++mismatches;
    }
    return {mismatches == 0, fmt("%d element mismatches over 100 random token sets", mismatches)};
}

// ---------------------------------------------------------------------------
// 9. Bitwise reproducibility: re-run, and resume from a checkpoint.

Outcome criterion_reproducibility() {
    const config::RunConfig rc = small_run_config();
    const auto scenes = scene::generate_dataset(rc.scene_gen, 90, 0, 6);
    const auto dir = std::filesystem::temp_directory_path();
    const auto path_a = dir / "drivegen_accept_a.json";
    const auto path_b = dir / "drivegen_accept_b.json";
    const auto path_mid = dir / "drivegen_accept_mid.json";

    auto run = [&](const std::filesystem::path& out, int checkpoint_every,
                   const train::EpochCallback& cb, nn::ParamStore& ps) {
        std::filesystem::remove(out);
        RngStream init(5);
        model::init_model(ps, rc.model, init);
        train::TrainConfig tc = rc.train;
        tc.epochs = 4;
        tc.seed = 17;
        tc.checkpoint_path = out.string();
        tc.checkpoint_every = checkpoint_every;
        tc.config_echo_json = config::run_config_to_json(rc);
        nn::AdamWState opt;
        train::train(ps, opt, rc.model, tc, scenes, cb);
    };

    nn::ParamStore ps_a, ps_b;
    run(path_a, 0, nullptr, ps_a);
    run(path_b, 0, nullptr, ps_b);
    const bool files_equal = slurp(path_a) == slurp(path_b);

    const std::string metrics_a = eval::metrics_to_json(
        eval::evaluate_dataset(ps_a, rc.model, model::Variant::kFull, scenes,
                               eval::MetricMode::kAtTimestep, model::SampleMode::kMean, 3));
    const std::string metrics_b = eval::metrics_to_json(
        eval::evaluate_dataset(ps_b, rc.model, model::Variant::kFull, scenes,
                               eval::MetricMode::kAtTimestep, model::SampleMode::kMean, 3));
    const bool metrics_equal = metrics_a == metrics_b;

    // Straight run saving every 2 epochs; grab the epoch-2 file when it
    // appears, then resume it and require the same final bytes.
    nn::ParamStore ps_straight;
    std::filesystem::remove(path_mid);
    run(path_a, 2, [&](const train::EpochLog& l) {
        if (l.epoch == 1) std::filesystem::copy_file(path_a, path_mid);
    }, ps_straight);

    nn::ParamStore ps_resumed;
    const auto meta = nn::peek_checkpoint(path_mid.string());
    {
        RngStream init(999);  // shapes only; every value is overwritten
        model::init_model(ps_resumed, rc.model, init);
    }
    const auto loaded = nn::load_checkpoint(path_mid.string(), ps_resumed);
    train::TrainConfig tc = rc.train;
    tc.epochs = 4;  // same horizon; the LR schedule spans the whole run
    tc.seed = 17;
    tc.checkpoint_path = path_b.string();
    tc.config_echo_json = meta.config_echo_json;
    nn::AdamWState opt = loaded.optimizer;
    train::train(ps_resumed, opt, rc.model, tc, scenes, nullptr);
    const bool resume_equal = slurp(path_a) == slurp(path_b);

    for (const auto& p : {path_a, path_b, path_mid}) std::filesystem::remove(p);
    const bool pass = files_equal && metrics_equal && resume_equal;
    return {pass, fmt("rerun checkpoints %s, metrics %s, resumed-vs-straight %s",
                      files_equal ? "identical" : "DIFFER", metrics_equal ? "identical" : "DIFFER",
                      resume_equal ? "identical" : "DIFFER")};
}

// ---------------------------------------------------------------------------
// 10. Output shape and mean-mode stability.

Outcome criterion_outputs() {
    const config::RunConfig rc = small_run_config();
    nn::ParamStore ps;
    RngStream init(12);
    model::init_model(ps, rc.model, init);
    const auto scenes = scene::generate_dataset(rc.scene_gen, 55, 0, 20);

    int bad_counts = 0, unstable = 0;
    for (const auto& s : scenes) {
        const scene::BevGrid grid = model::model_grid(s, rc.model);
        for (auto mode : {model::SampleMode::kMean, model::SampleMode::kSample}) {
            RngStream noise(7);
            RngStream* rng = mode == model::SampleMode::kSample ? &noise : nullptr;
            const auto res = model::run_inference(ps, rc.model, model::Variant::kFull, s, grid,
                                                  mode, rng);
            if (static_cast<int>(res.plan.size()) != geom::kFutureFrames) ++bad_counts;
            for (const auto& pred : res.predictions)
                if (static_cast<int>(pred.waypoints.size()) != geom::kFutureFrames) ++bad_counts;
        }
        const auto first = model::run_inference(ps, rc.model, model::Variant::kFull, s, grid,
                                                model::SampleMode::kMean, nullptr);
        const auto second = model::run_inference(ps, rc.model, model::Variant::kFull, s, grid,
                                                 model::SampleMode::kMean, nullptr);
        if (std::memcmp(first.plan.data(), second.plan.data(),
                        first.plan.size() * sizeof(geom::Vec2)) != 0)
            ++unstable;
    }
    return {bad_counts == 0 && unstable == 0,
            fmt("%d wrong waypoint counts, %d unstable mean-mode plans over 20 scenes",
                bad_counts, unstable)};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    auto selected = [&](int n) { return wanted.empty() || wanted.count(n) > 0; };

    static const char* kTitles[11] = {
        nullptr,
        "gradients match finite differences",
        "KL matches quadrature, is zero on self, never negative",
        "assignment matches exhaustive search",
        "box overlap matches dense sampling",
        "ground-truth plans score zero",
        "training beats the untrained model and constant velocity",
        "full variant beats no-map-no-rollout",
        "key-blocked fusion equals ego-free attention",
        "bitwise reproducible runs and resume",
        "waypoint counts and mean-mode stability",
    };

    std::array<Outcome, 11> results;
    std::array<bool, 11> ran{};
    auto record = [&](int n, Outcome o) {
        results[n] = std::move(o);
        ran[n] = true;
        std::fprintf(stderr, "  [%2d] %s\n", n, results[n].pass ? "pass" : "FAIL");
        std::fflush(stderr);
    };

    if (selected(1)) record(1, criterion_gradients());
    if (selected(2)) record(2, criterion_kl());
    if (selected(3)) record(3, criterion_matching());
    if (selected(4)) record(4, criterion_boxes());
    if (selected(5)) record(5, criterion_ground_truth());
    if (selected(8)) record(8, criterion_masking());
    if (selected(9)) record(9, criterion_reproducibility());
    if (selected(10)) record(10, criterion_outputs());
    if (selected(6) || selected(7)) {
        auto [six, seven] = criteria_training();
        record(6, std::move(six));
        record(7, std::move(seven));
    }

    bool all_pass = true;
    for (int n = 1; n <= 10; ++n) {
        if (!ran[n]) continue;
        std::printf("[%2d] %s  %s: %s\n", n, results[n].pass ? "PASS" : "FAIL", kTitles[n],
                    results[n].detail.c_str());
        all_pass = all_pass && results[n].pass;
    }
    std::printf("acceptance: %s\n", all_pass ? "all criteria pass" : "FAILURES above");
    return all_pass ? 0 : 1;
}
