#include "drivegen/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "drivegen/check.hpp"

namespace drivegen::config {
namespace {

struct Value {
    enum class Kind { kInt, kFloat, kBool, kString } kind;
    int64_t i = 0;
    double d = 0.0;
    bool b = false;
    std::string s;
};

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
    throw InputError("config " + where + ": " + msg);
}

Value parse_value(const std::string& raw, const std::string& where) {
    Value v{};
    if (raw.empty()) fail(where, "missing value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') fail(where, "unterminated string");
        v.kind = Value::Kind::kString;
        v.s = raw.substr(1, raw.size() - 2);
        if (v.s.find('"') != std::string::npos) fail(where, "embedded quote in string");
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = Value::Kind::kBool;
        v.b = raw == "true";
        return v;
    }
    const bool floaty = raw.find_first_of(".eE") != std::string::npos &&
                        raw.find("0x") != 0;  // 2e-4, 0.5; hex stays integral
    char* end = nullptr;
    if (floaty) {
        v.kind = Value::Kind::kFloat;
        v.d = std::strtod(raw.c_str(), &end);
    } else {
        v.kind = Value::Kind::kInt;
        v.i = std::strtoll(raw.c_str(), &end, 0);
    }
    if (end == raw.c_str() || *end != '\0') fail(where, "cannot parse value '" + raw + "'");
    return v;
}

// Field accessors; each names the key on a type mismatch.
int64_t as_int(const Value& v, const std::string& key, const std::string& where) {
    if (v.kind != Value::Kind::kInt) fail(where, "key '" + key + "' expects an integer");
    return v.i;
}

double as_float(const Value& v, const std::string& key, const std::string& where) {
    if (v.kind == Value::Kind::kInt) return static_cast<double>(v.i);
    if (v.kind != Value::Kind::kFloat) fail(where, "key '" + key + "' expects a number");
    return v.d;
}

std::string as_string(const Value& v, const std::string& key, const std::string& where) {
    if (v.kind != Value::Kind::kString) fail(where, "key '" + key + "' expects a quoted string");
    return v.s;
}

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Strips a trailing comment; the format has no '#' inside strings to worry
// about beyond quoted values, so scan with a quote flag.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

void apply(RunConfig& rc, const std::string& section, const std::string& key, const Value& v,
           const std::string& where) {
    const std::string full = section + "." + key;
    auto i = [&] { return as_int(v, full, where); };
    auto f = [&] { return as_float(v, full, where); };
    auto s = [&] { return as_string(v, full, where); };

    if (section == "scene_gen") {
        auto& g = rc.scene_gen;
        if (key == "lanes") g.lanes = static_cast<int>(i());
        else if (key == "lane_width") g.lane_width = f();
        else if (key == "map_length") g.map_length = f();
        else if (key == "min_agents") g.min_agents = static_cast<int>(i());
        else if (key == "max_agents") g.max_agents = static_cast<int>(i());
        else if (key == "min_speed") g.min_speed = f();
        else if (key == "max_speed") g.max_speed = f();
        else if (key == "max_curvature") g.max_curvature = f();
        else if (key == "p_straight") g.p_straight = f();
        else if (key == "p_arc") g.p_arc = f();
        else if (key == "p_lane_change") g.p_lane_change = f();
        else if (key == "crossing_prob") g.crossing_prob = f();
        else if (key == "agent_length") g.agent_length = f();
        else if (key == "agent_width") g.agent_width = f();
        else if (key == "spawn_margin") g.spawn_margin = f();
        else if (key == "max_spawn_retries") g.max_spawn_retries = static_cast<int>(i());
        else fail(where, "unknown key '" + full + "'");
    } else if (section == "model") {
        auto& m = rc.model;
        if (key == "dim") set_model_dim(m, static_cast<int>(i()));
        else if (key == "latent") m.generation.latent = static_cast<int>(i());
        else if (key == "map_tokens") m.tokenizer.map_tokens = static_cast<int>(i());
        else if (key == "agent_slots") m.tokenizer.agent_slots = static_cast<int>(i());
        else if (key == "attn_heads") m.tokenizer.attn.heads = static_cast<int>(i());
        else if (key == "attn_layers") m.tokenizer.attn.layers = static_cast<int>(i());
        else if (key == "ffn_mult") {
            m.tokenizer.attn.ffn_mult = static_cast<int>(i());
            m.tokenizer.deform.ffn_mult = static_cast<int>(i());
        }
        else if (key == "deform_layers") m.tokenizer.deform.layers = static_cast<int>(i());
        else if (key == "deform_points") m.tokenizer.deform.points = static_cast<int>(i());
        else if (key == "deform_offset_scale") m.tokenizer.deform.offset_scale = f();
        else if (key == "bev_cells") m.bev.cells = static_cast<int>(i());
        else if (key == "bev_extent") m.bev.extent = f();
        else fail(where, "unknown key '" + full + "'");
    } else if (section == "train") {
        auto& t = rc.train;
        if (key == "epochs") t.epochs = static_cast<int>(i());
        else if (key == "base_lr") t.base_lr = f();
        else if (key == "weight_decay") t.adamw.weight_decay = f();
        else if (key == "beta1") t.adamw.beta1 = f();
        else if (key == "beta2") t.adamw.beta2 = f();
        else if (key == "eps") t.adamw.eps = f();
        else if (key == "seed") t.seed = static_cast<uint64_t>(i());
        else if (key == "teacher_mode") t.teacher_mode = model::sample_mode_from_string(s());
        else if (key == "variant") t.variant = model::variant_from_string(s());
        else if (key == "checkpoint_every") t.checkpoint_every = static_cast<int>(i());
        else if (key == "w_traj") t.weights.traj = f();
        else if (key == "w_latent") t.weights.latent = f();
        else if (key == "w_det") t.weights.det = f();
        else if (key == "w_map") t.weights.map = f();
        else fail(where, "unknown key '" + full + "'");
    } else if (section == "eval") {
        if (key == "metric_mode") rc.metric_mode = eval::metric_mode_from_string(s());
        else if (key == "sample_mode") rc.sample_mode = model::sample_mode_from_string(s());
        else fail(where, "unknown key '" + full + "'");
    } else if (section == "ablation") {
        auto& a = rc.ablation;
        if (key == "train_scenes") a.train_scenes = static_cast<int>(i());
        else if (key == "eval_scenes") a.eval_scenes = static_cast<int>(i());
        else if (key == "data_seed") a.data_seed = static_cast<uint64_t>(i());
        else if (key == "init_seed") a.init_seed = static_cast<uint64_t>(i());
        else fail(where, "unknown key '" + full + "'");
    } else {
        fail(where, "unknown section [" + section + "]");
    }
}

}  // namespace

void set_model_dim(model::ModelConfig& mc, int dim) {
    mc.tokenizer.dim = dim;
    mc.tokenizer.attn.dim = dim;
    mc.tokenizer.deform.dim = dim;
    mc.generation.dim = dim;
}

void apply_full_scale(RunConfig& rc) {
    set_model_dim(rc.model, 256);
    rc.model.generation.latent = 512;
    rc.model.tokenizer.map_tokens = 100;
    rc.model.tokenizer.agent_slots = 300;
    rc.model.bev.cells = 100;
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig rc;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string where = "line " + std::to_string(line_no);
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(where, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) fail(where, "empty section name");
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) fail(where, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail(where, "empty key");
        if (section.empty()) fail(where, "key '" + key + "' outside any section");
        const Value v = parse_value(trim(line.substr(eq + 1)), where);
        apply(rc, section, key, v, where);
    }
    return rc;
}

RunConfig run_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config echo: invalid JSON: ") + e.what());
    }
    check_arg(j.is_object(), "config echo: top level must be an object");
    RunConfig rc;
    for (const auto& [section, body] : j.items()) {
        check_arg(body.is_object(), "config echo: section '" + section + "' must be an object");
        for (const auto& [key, val] : body.items()) {
            Value v{};
            if (val.is_boolean()) {
                v.kind = Value::Kind::kBool;
                v.b = val.get<bool>();
            } else if (val.is_number_unsigned()) {
                v.kind = Value::Kind::kInt;
                v.i = static_cast<int64_t>(val.get<uint64_t>());  // seeds round-trip bitwise
            } else if (val.is_number_integer()) {
                v.kind = Value::Kind::kInt;
                v.i = val.get<int64_t>();
            } else if (val.is_number_float()) {
                v.kind = Value::Kind::kFloat;
                v.d = val.get<double>();
            } else if (val.is_string()) {
                v.kind = Value::Kind::kString;
                v.s = val.get<std::string>();
            } else {
                fail("echo", "unsupported value for '" + section + "." + key + "'");
            }
            apply(rc, section, key, v, "echo");
        }
    }
    return rc;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    check_arg(in.good(), "cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_run_config(buf.str());
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

std::string run_config_to_json(const RunConfig& rc) {
    nlohmann::ordered_json j;
    const auto& g = rc.scene_gen;
    j["scene_gen"] = {{"lanes", g.lanes},
                      {"lane_width", g.lane_width},
                      {"map_length", g.map_length},
                      {"min_agents", g.min_agents},
                      {"max_agents", g.max_agents},
                      {"min_speed", g.min_speed},
                      {"max_speed", g.max_speed},
                      {"max_curvature", g.max_curvature},
                      {"p_straight", g.p_straight},
                      {"p_arc", g.p_arc},
                      {"p_lane_change", g.p_lane_change},
                      {"crossing_prob", g.crossing_prob},
                      {"agent_length", g.agent_length},
                      {"agent_width", g.agent_width},
                      {"spawn_margin", g.spawn_margin},
                      {"max_spawn_retries", g.max_spawn_retries}};
    const auto& m = rc.model;
    j["model"] = {{"dim", m.tokenizer.dim},
                  {"latent", m.generation.latent},
                  {"map_tokens", m.tokenizer.map_tokens},
                  {"agent_slots", m.tokenizer.agent_slots},
                  {"attn_heads", m.tokenizer.attn.heads},
                  {"attn_layers", m.tokenizer.attn.layers},
                  {"ffn_mult", m.tokenizer.attn.ffn_mult},
                  {"deform_layers", m.tokenizer.deform.layers},
                  {"deform_points", m.tokenizer.deform.points},
                  {"deform_offset_scale", m.tokenizer.deform.offset_scale},
                  {"bev_cells", m.bev.cells},
                  {"bev_extent", m.bev.extent}};
    const auto& t = rc.train;
    j["train"] = {{"epochs", t.epochs},
                  {"base_lr", t.base_lr},
                  {"weight_decay", t.adamw.weight_decay},
                  {"beta1", t.adamw.beta1},
                  {"beta2", t.adamw.beta2},
                  {"eps", t.adamw.eps},
                  {"seed", t.seed},
                  {"teacher_mode", model::to_string(t.teacher_mode)},
                  {"variant", model::to_string(t.variant)},
                  {"checkpoint_every", t.checkpoint_every},
                  {"w_traj", t.weights.traj},
                  {"w_latent", t.weights.latent},
                  {"w_det", t.weights.det},
                  {"w_map", t.weights.map}};
    j["eval"] = {{"metric_mode", eval::to_string(rc.metric_mode)},
                 {"sample_mode", model::to_string(rc.sample_mode)}};
    j["ablation"] = {{"train_scenes", rc.ablation.train_scenes},
                     {"eval_scenes", rc.ablation.eval_scenes},
                     {"data_seed", rc.ablation.data_seed},
                     {"init_seed", rc.ablation.init_seed}};
    return j.dump(2) + "\n";
}

}  // namespace drivegen::config
