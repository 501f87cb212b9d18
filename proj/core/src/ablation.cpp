#include "drivegen/ablation.hpp"

#include <sstream>

#include "json.hpp"

#include "drivegen/check.hpp"

namespace drivegen::eval {

namespace {

// nlohmann emits the shortest digits that restore the double, and keeps a
// trailing ".0" so a number stays visibly a float.
std::string num(double v) { return nlohmann::json(v).dump(); }

}  // namespace

AblationReport run_ablation(const AblationConfig& cfg, const AblationProgress& progress) {
    check_arg(cfg.train_scenes > 0, "run_ablation: train_scenes must be positive");
    check_arg(cfg.eval_scenes > 0, "run_ablation: eval_scenes must be positive");

    const auto train_set = scene::generate_dataset(
        cfg.scene_gen, RngStream::mix(cfg.data_seed, 0), 0, cfg.train_scenes);
    const auto eval_set = scene::generate_dataset(
        cfg.scene_gen, RngStream::mix(cfg.data_seed, 1), cfg.train_scenes, cfg.eval_scenes);

    AblationReport report;
    for (model::Variant variant : model::all_variants()) {
        nn::ParamStore ps;
        RngStream init_rng(cfg.init_seed);
        model::init_model(ps, cfg.model, init_rng);
        nn::AdamWState opt;

        train::TrainConfig tc = cfg.train;
        tc.variant = variant;
        tc.checkpoint_path.clear();
        tc.checkpoint_every = 0;
        train::EpochCallback cb;
        if (progress) cb = [&](const train::EpochLog& log) { progress(variant, log); };
        const train::TrainResult res = train::train(ps, opt, cfg.model, tc, train_set, cb);

        AblationRow row;
        row.variant = variant;
        row.first_loss = res.history.front().total;
        row.final_loss = res.history.back().total;
        row.metrics = evaluate_dataset(ps, cfg.model, variant, eval_set, cfg.metric_mode,
                                       model::SampleMode::kMean, 0);
        report.rows.push_back(row);
    }
    return report;
}

std::string ablation_to_csv(const AblationReport& report) {
    std::ostringstream out;
    out << "variant,first_loss,final_loss,plan_l2_1s,plan_l2_2s,plan_l2_3s,"
           "collision_rate_1s,collision_rate_2s,collision_rate_3s,epa,pred_l2\n";
    for (const AblationRow& row : report.rows) {
        const DatasetMetrics& m = row.metrics;
        out << model::to_string(row.variant) << ',' << num(row.first_loss) << ','
            << num(row.final_loss);
        for (double v : m.plan_l2) out << ',' << num(v);
        for (double v : m.collision_rate) out << ',' << num(v);
        out << ',' << num(m.epa) << ',' << num(m.pred_l2) << '\n';
    }
    return out.str();
}

std::string ablation_to_json(const AblationReport& report) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const AblationRow& row : report.rows) {
        nlohmann::ordered_json r;
        r["variant"] = model::to_string(row.variant);
        r["first_loss"] = row.first_loss;
        r["final_loss"] = row.final_loss;
        r["metrics"] = nlohmann::ordered_json::parse(metrics_to_json(row.metrics));
        rows.push_back(r);
    }
    nlohmann::ordered_json j;
    j["rows"] = rows;
    return j.dump(2) + "\n";
}

}  // namespace drivegen::eval
