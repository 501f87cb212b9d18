// The eval report schema shipped in schemas/ is checked here with a small
// draft-07 subset validator, enough for the keywords the schema uses.
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "drivegen/check.hpp"
#include "drivegen/config.hpp"
#include "drivegen/metrics.hpp"
#include "drivegen/model.hpp"
#include "drivegen/rng.hpp"
#include "drivegen/scene_gen.hpp"

using namespace drivegen;
using nlohmann::json;

namespace {

// Validates `value` against the schema subset we publish: type, required,
// properties, additionalProperties:false, enum, minimum, maximum.
void validate(const json& schema, const json& value, const std::string& path,
              std::vector<std::string>& errors) {
    if (schema.contains("type")) {
        const std::string t = schema["type"];
        bool ok = false;
        if (t == "object") ok = value.is_object();
        else if (t == "array") ok = value.is_array();
        else if (t == "string") ok = value.is_string();
        else if (t == "boolean") ok = value.is_boolean();
        else if (t == "integer") ok = value.is_number_integer() || value.is_number_unsigned();
        else if (t == "number") ok = value.is_number();
        if (!ok) {
            errors.push_back(path + ": expected " + t);
            return;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& option : schema["enum"])
            if (option == value) found = true;
        if (!found) errors.push_back(path + ": not one of the allowed values");
    }
    if (schema.contains("minimum") && value.is_number() &&
        value.get<double>() < schema["minimum"].get<double>())
        errors.push_back(path + ": below minimum");
    if (schema.contains("maximum") && value.is_number() &&
        value.get<double>() > schema["maximum"].get<double>())
        errors.push_back(path + ": above maximum");
    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema["required"])
                if (!value.contains(key.get<std::string>()))
                    errors.push_back(path + ": missing required key " + key.get<std::string>());
        const json props = schema.value("properties", json::object());
        for (const auto& [key, sub] : value.items()) {
            if (props.contains(key)) {
                validate(props[key], sub, path + "/" + key, errors);
            } else if (schema.value("additionalProperties", json(true)) == json(false)) {
                errors.push_back(path + ": unexpected key " + key);
            }
        }
    }
}

std::vector<std::string> validate(const json& schema, const json& value) {
    std::vector<std::string> errors;
    validate(schema, value, "", errors);
    return errors;
}

json load_schema() {
    std::ifstream in(DRIVEGEN_SCHEMA_PATH);
    REQUIRE(in.good());
    return json::parse(in);
}

json real_report(eval::MetricMode mode) {
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

    const auto scenes = scene::generate_dataset(rc.scene_gen, 12, 0, 3);
    nn::ParamStore ps;
    RngStream init(9);
    model::init_model(ps, rc.model, init);
    const eval::DatasetMetrics m = eval::evaluate_dataset(
        ps, rc.model, model::Variant::kFull, scenes, mode, model::SampleMode::kMean, 5);
    return json::parse(eval::evaluation_report_json(config::run_config_to_json(rc), 7, m));
}

}  // namespace

TEST_CASE("eval reports validate against the shipped schema") {
    const json schema = load_schema();
    CHECK(schema["required"].size() == 3);

    for (auto mode : {eval::MetricMode::kAtTimestep, eval::MetricMode::kFrameAveraged}) {
        const json report = real_report(mode);
        const auto errors = validate(schema, report);
        for (const auto& e : errors) MESSAGE(e);
        CHECK(errors.empty());
    }
}

TEST_CASE("schema rejects malformed reports") {
    const json schema = load_schema();
    const json good = real_report(eval::MetricMode::kAtTimestep);
    REQUIRE(validate(schema, good).empty());

    json missing = good;
    missing.erase("seed");
    CHECK(!validate(schema, missing).empty());

    json bad_mode = good;
    bad_mode["metrics"]["mode"] = "sideways";
    CHECK(!validate(schema, bad_mode).empty());

    json bad_rate = good;
    bad_rate["metrics"]["collision_rate_3s"] = 1.5;
    CHECK(!validate(schema, bad_rate).empty());

    json bad_epa = good;
    bad_epa["metrics"]["epa"] = -2.0;
    CHECK(!validate(schema, bad_epa).empty());

    json extra = good;
    extra["metrics"]["bonus"] = 1;
    CHECK(!validate(schema, extra).empty());

    json bad_seed = good;
    bad_seed["seed"] = "twelve";
    CHECK(!validate(schema, bad_seed).empty());

    json negative = good;
    negative["metrics"]["plan_l2_2s"] = -0.25;
    CHECK(!validate(schema, negative).empty());
}

TEST_CASE("report builder rejects non-object config") {
    eval::DatasetMetrics m;
    CHECK_THROWS_AS(eval::evaluation_report_json("[1,2]", 0, m), InputError);
}
