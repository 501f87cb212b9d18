#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "drivegen/optimizer.hpp"
#include "drivegen/param_store.hpp"

namespace drivegen::nn {

// Checkpoints are JSON: format version, a verbatim echo of the run
// configuration, the training seed, every parameter tensor as
// base64-encoded little-endian float32, and (optionally) AdamW step count
// and moments in the same encoding. Values are float32-representable by
// construction (see round_f32), so save followed by load is lossless.

/// Doubles -> little-endian float32 bytes -> base64.
std::string encode_f32_base64(std::span<const double> values);
/// Inverse of encode_f32_base64; throws InputError on malformed base64 or
/// when the payload does not hold exactly `expected_count` floats.
std::vector<double> decode_f32_base64(const std::string& text, size_t expected_count);

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const std::string& config_echo_json, uint64_t seed,
                     const AdamWState* optimizer = nullptr);

struct LoadedCheckpoint {
    std::string config_echo_json;
    uint64_t seed = 0;
    bool has_optimizer = false;
    AdamWState optimizer;
};

/// Reads only the metadata (config echo, seed, optimizer presence), leaving
/// the moments empty. Lets a caller build a matching store before the full
/// load_checkpoint.
LoadedCheckpoint peek_checkpoint(const std::string& path);

/// Fills an already-initialized store. Every stored tensor must exist with
/// the same shape and every store tensor must be present; any mismatch,
/// unknown version or undecodable payload throws InputError.
LoadedCheckpoint load_checkpoint(const std::string& path, ParamStore& params);

}  // namespace drivegen::nn
