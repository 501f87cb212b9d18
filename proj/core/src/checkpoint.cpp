#include "drivegen/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

#include "drivegen/check.hpp"

namespace drivegen::nn {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

std::string base64_encode(std::span<const uint8_t> bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back(kAlphabet[v & 63]);
    }
    const size_t rest = bytes.size() - i;
    if (rest == 1) {
        const uint32_t v = bytes[i] << 16;
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (rest == 2) {
        const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
    check_arg(text.size() % 4 == 0, "base64: length not a multiple of 4");
    std::vector<uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=') {
                check_arg(i + 4 == text.size() && k >= 2, "base64: misplaced padding");
                vals[k] = 0;
                ++pad;
            } else {
                check_arg(pad == 0, "base64: data after padding");
                vals[k] = decode_char(c);
                check_arg(vals[k] >= 0, std::string("base64: invalid character '") + c + "'");
            }
        }
        const uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
        out.push_back((v >> 16) & 0xff);
        if (pad < 2) out.push_back((v >> 8) & 0xff);
        if (pad < 1) out.push_back(v & 0xff);
    }
    return out;
}

}  // namespace

std::string encode_f32_base64(std::span<const double> values) {
    std::vector<uint8_t> bytes;
    bytes.reserve(values.size() * 4);
    for (double d : values) {
        const float f = static_cast<float>(d);
        uint32_t u;
        std::memcpy(&u, &f, 4);
        bytes.push_back(u & 0xff);
        bytes.push_back((u >> 8) & 0xff);
        bytes.push_back((u >> 16) & 0xff);
        bytes.push_back((u >> 24) & 0xff);
    }
    return base64_encode(bytes);
}

std::vector<double> decode_f32_base64(const std::string& text, size_t expected_count) {
    const std::vector<uint8_t> bytes = base64_decode(text);
    check_arg(bytes.size() == expected_count * 4,
              "float payload holds " + std::to_string(bytes.size() / 4) + " values, expected " +
                  std::to_string(expected_count));
    std::vector<double> out(expected_count);
    for (size_t i = 0; i < expected_count; ++i) {
        const uint32_t u = static_cast<uint32_t>(bytes[4 * i]) |
                           (static_cast<uint32_t>(bytes[4 * i + 1]) << 8) |
                           (static_cast<uint32_t>(bytes[4 * i + 2]) << 16) |
                           (static_cast<uint32_t>(bytes[4 * i + 3]) << 24);
        float f;
        std::memcpy(&f, &u, 4);
        out[i] = static_cast<double>(f);
    }
    return out;
}

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const std::string& config_echo_json, uint64_t seed,
                     const AdamWState* optimizer) {
    nlohmann::json j;
    j["format_version"] = 1;
    if (config_echo_json.empty()) {
        j["config"] = nlohmann::json::object();
    } else {
        j["config"] = nlohmann::json::parse(config_echo_json);
    }
    j["seed"] = seed;

    nlohmann::json jp = nlohmann::json::object();
    for (const auto& [name, t] : params) {
        jp[name] = {{"shape", {t.rows(), t.cols()}}, {"data", encode_f32_base64(t.values())}};
    }
    j["params"] = std::move(jp);

    if (optimizer) {
        nlohmann::json jo;
        jo["step"] = optimizer->step;
        nlohmann::json jm = nlohmann::json::object();
        nlohmann::json jv = nlohmann::json::object();
        for (const auto& [name, mom] : optimizer->moments) {
            jm[name] = encode_f32_base64(mom.m);
            jv[name] = encode_f32_base64(mom.v);
        }
        jo["m"] = std::move(jm);
        jo["v"] = std::move(jv);
        j["optimizer"] = std::move(jo);
    }

    std::ofstream out(path);
    check_state(out.good(), "save_checkpoint: cannot open \"" + path + "\" for writing");
    out << j.dump(2) << "\n";
    check_state(out.good(), "save_checkpoint: write to \"" + path + "\" failed");
}

LoadedCheckpoint peek_checkpoint(const std::string& path) {
    std::ifstream in(path);
    check_arg(in.good(), "peek_checkpoint: cannot open \"" + path + "\"");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("peek_checkpoint: \"" + path + "\" is not valid JSON: " + e.what());
    }
    check_arg(j.value("format_version", -1) == 1,
              "peek_checkpoint: \"" + path + "\": unsupported format_version");
    LoadedCheckpoint loaded;
    loaded.config_echo_json = j.value("config", nlohmann::json::object()).dump();
    loaded.seed = j.value("seed", 0ULL);
    loaded.has_optimizer = j.contains("optimizer");
    return loaded;
}

LoadedCheckpoint load_checkpoint(const std::string& path, ParamStore& params) {
    std::ifstream in(path);
    check_arg(in.good(), "load_checkpoint: cannot open \"" + path + "\"");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("load_checkpoint: \"" + path + "\" is not valid JSON: " + e.what());
    }

    try {
        check_arg(j.value("format_version", -1) == 1,
                  "load_checkpoint: \"" + path + "\": unsupported format_version");
        check_arg(j.contains("params") && j["params"].is_object(),
                  "load_checkpoint: \"" + path + "\": missing params object");

        const nlohmann::json& jp = j["params"];
        for (const auto& [name, entry] : jp.items()) {
            check_arg(params.contains(name),
                      "load_checkpoint: \"" + path + "\": unknown parameter \"" + name + "\"");
        }
        for (auto& [name, t] : params) {
            check_arg(jp.contains(name),
                      "load_checkpoint: \"" + path + "\": missing parameter \"" + name + "\"");
            const nlohmann::json& entry = jp.at(name);
            const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
            check_arg(shape.size() == 2 && shape[0] == t.rows() && shape[1] == t.cols(),
                      "load_checkpoint: \"" + path + "\": shape mismatch for \"" + name + "\"");
            t.mutable_values() =
                decode_f32_base64(entry.at("data").get<std::string>(), t.values().size());
        }

        LoadedCheckpoint loaded;
        loaded.config_echo_json = j.value("config", nlohmann::json::object()).dump();
        loaded.seed = j.value("seed", 0ULL);
        if (j.contains("optimizer")) {
            loaded.has_optimizer = true;
            const nlohmann::json& jo = j["optimizer"];
            loaded.optimizer.step = jo.at("step").get<int64_t>();
            for (auto& [name, t] : params) {
                Moments mom;
                mom.m = decode_f32_base64(jo.at("m").at(name).get<std::string>(),
                                          t.values().size());
                mom.v = decode_f32_base64(jo.at("v").at(name).get<std::string>(),
                                          t.values().size());
                loaded.optimizer.moments[name] = std::move(mom);
            }
        }
        return loaded;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("load_checkpoint: \"" + path + "\" is malformed: " + e.what());
    }
}

}  // namespace drivegen::nn
