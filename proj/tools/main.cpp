// Command-line front end: dataset generation, training, evaluation,
// sampling futures, SVG plots and the variant comparison, all reproducible
// from a config file plus a seed.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "drivegen/ablation.hpp"
#include "drivegen/check.hpp"
#include "drivegen/checkpoint.hpp"
#include "drivegen/config.hpp"
#include "drivegen/dataset.hpp"
#include "drivegen/svg.hpp"

using namespace drivegen;

namespace {

config::RunConfig load_config_or_default(const std::string& path, bool full_scale) {
    config::RunConfig rc = path.empty() ? config::RunConfig{} : config::load_run_config(path);
    if (full_scale) config::apply_full_scale(rc);
    model::validate_model_config(rc.model);
    return rc;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    check_state(out.good(), "cannot open \"" + path + "\" for writing");
    out << text;
    check_state(out.good(), "write to \"" + path + "\" failed");
}

/// Rebuilds the parameter store a checkpoint was saved from (shapes come
/// from its config echo), then loads the weights into it.
config::RunConfig load_model(const std::string& ck_path, nn::ParamStore& ps) {
    const nn::LoadedCheckpoint meta = nn::peek_checkpoint(ck_path);
    const config::RunConfig rc = config::run_config_from_json(meta.config_echo_json);
    RngStream shape_rng(0);  // values are overwritten by the load
    model::init_model(ps, rc.model, shape_rng);
    nn::load_checkpoint(ck_path, ps);
    return rc;
}

nlohmann::ordered_json vec2_json(const std::vector<geom::Vec2>& pts) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const geom::Vec2& p : pts) arr.push_back({p.x, p.y});
    return arr;
}

int cmd_gen_data(const std::string& config_path, const std::string& out, int scenes,
                 uint64_t seed) {
    const config::RunConfig rc = load_config_or_default(config_path, false);
    const auto data = scene::generate_dataset(rc.scene_gen, seed, 0, scenes);
    scene::write_scenes_jsonl(out, data);

    nlohmann::ordered_json meta;
    meta["config"] = nlohmann::ordered_json::parse(config::run_config_to_json(rc));
    meta["seed"] = seed;
    meta["scenes"] = scenes;
    write_text(out + ".meta.json", meta.dump(2) + "\n");
    std::cout << "wrote " << scenes << " scenes to " << out << "\n";
    return 0;
}

int cmd_train(config::RunConfig rc, const std::string& data_path, const std::string& out,
              const std::string& resume, const std::string& log_path) {
    const auto scenes = scene::read_scenes_jsonl(data_path);
    rc.train.checkpoint_path = out;
    rc.train.config_echo_json = config::run_config_to_json(rc);

    nn::ParamStore ps;
    RngStream init_rng(RngStream::mix(rc.train.seed, 0x11));
    model::init_model(ps, rc.model, init_rng);
    nn::AdamWState opt;
    if (!resume.empty()) {
        const nn::LoadedCheckpoint loaded = nn::load_checkpoint(resume, ps);
        check_arg(loaded.has_optimizer, "resume checkpoint lacks optimizer state: " + resume);
        opt = loaded.optimizer;
        std::cout << "resuming at step " << opt.step << "\n";
    }

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path, resume.empty() ? std::ios::trunc : std::ios::app);
        check_state(log.good(), "cannot open \"" + log_path + "\" for writing");
    }
    train::train(ps, opt, rc.model, rc.train, scenes, [&](const train::EpochLog& e) {
        std::printf("epoch %3d/%d  lr %.3e  total %.4f  (traj %.4f latent %.4f det %.4f map %.4f)\n",
                    e.epoch + 1, rc.train.epochs, e.lr, e.total, e.traj, e.latent, e.det, e.map);
        std::fflush(stdout);
        if (log.is_open()) {
            nlohmann::ordered_json line = {{"epoch", e.epoch}, {"lr", e.lr},
                                           {"traj", e.traj},   {"latent", e.latent},
                                           {"det", e.det},     {"map", e.map},
                                           {"total", e.total}};
            log << line.dump() << "\n";
        }
    });
    std::cout << "checkpoint written to " << out << "\n";
    return 0;
}

int cmd_eval(const std::string& ck_path, const std::string& data_path, const std::string& out,
             const std::string& metric_mode, const std::string& mode, uint64_t seed,
             bool use_gt_plan) {
    nn::ParamStore ps;
    const config::RunConfig rc = load_model(ck_path, ps);
    const auto scenes = scene::read_scenes_jsonl(data_path);
    check_arg(!scenes.empty(), "dataset is empty: " + data_path);

    const eval::MetricMode mm = metric_mode.empty() ? rc.metric_mode
                                                    : eval::metric_mode_from_string(metric_mode);
    const model::SampleMode sm =
        mode.empty() ? rc.sample_mode : model::sample_mode_from_string(mode);
    const eval::DatasetMetrics m =
        eval::evaluate_dataset(ps, rc.model, rc.train.variant, scenes, mm, sm, seed, use_gt_plan);

    const std::string text =
        eval::evaluation_report_json(config::run_config_to_json(rc), seed, m);
    if (!out.empty()) write_text(out, text);
    std::cout << eval::metrics_to_json(m);
    return 0;
}

int cmd_sample(const std::string& ck_path, const std::string& data_path, int index, int samples,
               const std::string& mode, uint64_t seed, const std::string& out) {
    check_arg(samples > 0, "--samples must be positive");
    nn::ParamStore ps;
    const config::RunConfig rc = load_model(ck_path, ps);
    const auto scenes = scene::read_scenes_jsonl(data_path);
    check_arg(index >= 0 && index < static_cast<int>(scenes.size()),
              "--index out of range (dataset has " + std::to_string(scenes.size()) + " scenes)");
    const scene::Scene& s = scenes[index];
    const scene::BevGrid grid = model::model_grid(s, rc.model);
    const model::SampleMode sm = model::sample_mode_from_string(mode);

    nlohmann::ordered_json result;
    result["config"] = nlohmann::ordered_json::parse(config::run_config_to_json(rc));
    result["scene_id"] = s.id;
    result["mode"] = mode;
    result["seed"] = seed;
    nlohmann::ordered_json draws = nlohmann::ordered_json::array();
    for (int k = 0; k < samples; ++k) {
        RngStream rng(RngStream::mix(seed, k));
        const model::InferenceResult inf =
            model::run_inference(ps, rc.model, rc.train.variant, s, grid, sm,
                                 sm == model::SampleMode::kSample ? &rng : nullptr);
        nlohmann::ordered_json draw;
        draw["plan"] = vec2_json(inf.plan);
        nlohmann::ordered_json preds = nlohmann::ordered_json::array();
        for (const model::AgentPrediction& p : inf.predictions) {
            preds.push_back({{"slot", p.slot},
                             {"pose", {p.detection.pose.x, p.detection.pose.y,
                                       p.detection.pose.heading}},
                             {"waypoints", vec2_json(p.waypoints)}});
        }
        draw["predictions"] = preds;
        draws.push_back(draw);
    }
    result["samples"] = draws;
    const std::string text = result.dump(2) + "\n";
    if (out.empty()) {
        std::cout << text;
    } else {
        write_text(out, text);
        std::cout << "wrote " << samples << " futures to " << out << "\n";
    }
    return 0;
}

int cmd_plot(const std::string& data_path, int index, const std::string& ck_path,
             const std::string& mode, uint64_t seed, const std::string& out) {
    const auto scenes = scene::read_scenes_jsonl(data_path);
    check_arg(index >= 0 && index < static_cast<int>(scenes.size()),
              "--index out of range (dataset has " + std::to_string(scenes.size()) + " scenes)");
    const scene::Scene& s = scenes[index];

    model::InferenceResult inf;
    bool have_inference = false;
    if (!ck_path.empty()) {
        nn::ParamStore ps;
        const config::RunConfig rc = load_model(ck_path, ps);
        const scene::BevGrid grid = model::model_grid(s, rc.model);
        const model::SampleMode sm = model::sample_mode_from_string(mode);
        RngStream rng(seed);
        inf = model::run_inference(ps, rc.model, rc.train.variant, s, grid, sm,
                                   sm == model::SampleMode::kSample ? &rng : nullptr);
        have_inference = true;
    }
    write_text(out, viz::render_svg(s, have_inference ? &inf : nullptr));
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_ablate(const config::RunConfig& rc, const std::string& out) {
    eval::AblationConfig ac;
    ac.model = rc.model;
    ac.train = rc.train;
    ac.scene_gen = rc.scene_gen;
    ac.train_scenes = rc.ablation.train_scenes;
    ac.eval_scenes = rc.ablation.eval_scenes;
    ac.data_seed = rc.ablation.data_seed;
    ac.init_seed = rc.ablation.init_seed;
    ac.metric_mode = rc.metric_mode;

    const eval::AblationReport report =
        eval::run_ablation(ac, [&](model::Variant v, const train::EpochLog& e) {
            std::printf("[%s] epoch %3d/%d  total %.4f\n", model::to_string(v).c_str(),
                        e.epoch + 1, rc.train.epochs, e.total);
            std::fflush(stdout);
        });

    const bool csv = out.size() >= 4 && out.rfind(".csv") == out.size() - 4;
    const bool json = out.size() >= 5 && out.rfind(".json") == out.size() - 5;
    check_arg(csv || json, "--out must end in .csv or .json: " + out);
    write_text(out, csv ? eval::ablation_to_csv(report) : eval::ablation_to_json(report));
    std::cout << eval::ablation_to_csv(report);
    std::cout << "wrote " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drivegen: generative trajectory models on procedural driving scenes"};
    app.require_subcommand(1);

    std::string config_path, out, data_path, ck_path, resume, log_path;
    std::string mode = "mean", metric_mode;
    uint64_t seed = 0;
    int scenes = 64, index = 0, samples = 5, epochs = -1;
    bool full_scale = false, use_gt_plan = false;
    std::string variant;

    auto* gen = app.add_subcommand("gen-data", "Generate a procedural scene dataset (JSONL)");
    gen->add_option("--config", config_path, "Run config file (TOML-style)");
    gen->add_option("--out", out, "Output dataset path")->required();
    gen->add_option("--scenes", scenes, "Number of scenes")->capture_default_str();
    gen->add_option("--seed", seed, "Dataset seed")->capture_default_str();

    auto* tr = app.add_subcommand("train", "Train a model on a dataset");
    tr->add_option("--config", config_path, "Run config file (TOML-style)");
    tr->add_option("--data", data_path, "Training dataset (JSONL)")->required();
    tr->add_option("--out", out, "Checkpoint output path")->required();
    tr->add_option("--seed", seed, "Training seed (overrides config)");
    tr->add_option("--variant", variant,
                   "Model variant: full, no-ego-to-agent, no-map-injection, no-rollout, "
                   "no-map-no-rollout");
    tr->add_option("--epochs", epochs, "Epoch count (overrides config)");
    tr->add_option("--resume", resume, "Checkpoint to continue from");
    tr->add_option("--log", log_path, "Append per-epoch JSON lines here");
    tr->add_flag("--full-scale", full_scale, "Use the full-scale dimensions (slow)");

    auto* ev = app.add_subcommand("eval", "Score a checkpoint on a dataset");
    ev->add_option("--checkpoint", ck_path, "Trained checkpoint")->required();
    ev->add_option("--data", data_path, "Evaluation dataset (JSONL)")->required();
    ev->add_option("--out", out, "Write the metrics report here");
    ev->add_option("--metric-mode", metric_mode, "at_timestep or frame_averaged");
    ev->add_option("--mode", mode, "Latent mode: mean or sample")->capture_default_str();
    ev->add_option("--seed", seed, "Sampling seed (sample mode)")->capture_default_str();
    ev->add_flag("--use-gt-plan", use_gt_plan, "Score the ground-truth ego plan instead");

    auto* sa = app.add_subcommand("sample", "Draw multiple futures for one scene");
    sa->add_option("--checkpoint", ck_path, "Trained checkpoint")->required();
    sa->add_option("--data", data_path, "Dataset (JSONL)")->required();
    sa->add_option("--index", index, "Scene index in the dataset")->capture_default_str();
    sa->add_option("--samples", samples, "Number of futures")->capture_default_str();
    sa->add_option("--mode", mode, "Latent mode: mean or sample")->capture_default_str();
    sa->add_option("--seed", seed, "Sampling seed")->capture_default_str();
    sa->add_option("--out", out, "Output JSON (stdout when omitted)");

    auto* pl = app.add_subcommand("plot", "Render a scene (and optionally a model's outputs)");
    pl->add_option("--data", data_path, "Dataset (JSONL)")->required();
    pl->add_option("--index", index, "Scene index in the dataset")->capture_default_str();
    pl->add_option("--checkpoint", ck_path, "Overlay this checkpoint's inference");
    pl->add_option("--mode", mode, "Latent mode: mean or sample")->capture_default_str();
    pl->add_option("--seed", seed, "Sampling seed (sample mode)")->capture_default_str();
    pl->add_option("--out", out, "Output SVG path")->required();

    auto* ab = app.add_subcommand("ablate", "Train and score every model variant");
    ab->add_option("--config", config_path, "Run config file (TOML-style)");
    ab->add_option("--out", out, "Report path (.csv or .json)")->required();
    ab->add_option("--seed", seed, "Training seed (overrides config)");
    ab->add_flag("--full-scale", full_scale, "Use the full-scale dimensions (slow)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, out, scenes, seed);
        if (tr->parsed()) {
            config::RunConfig rc = load_config_or_default(config_path, full_scale);
            if (tr->count("--seed")) rc.train.seed = seed;
            if (!variant.empty()) rc.train.variant = model::variant_from_string(variant);
            if (epochs > 0) rc.train.epochs = epochs;
            return cmd_train(rc, data_path, out, resume, log_path);
        }
        if (ev->parsed())
            return cmd_eval(ck_path, data_path, out, metric_mode, mode, seed, use_gt_plan);
        if (sa->parsed())
            return cmd_sample(ck_path, data_path, index, samples, mode, seed, out);
        if (pl->parsed()) return cmd_plot(data_path, index, ck_path, mode, seed, out);
        if (ab->parsed()) {
            config::RunConfig rc = load_config_or_default(config_path, full_scale);
            if (ab->count("--seed")) rc.train.seed = seed;
            return cmd_ablate(rc, out);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const StateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
