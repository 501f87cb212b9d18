#pragma once

#include <span>
#include <string>
#include <vector>

#include "drivegen/scene.hpp"

namespace drivegen::scene {

// Datasets are JSON Lines: one scene object per line, schema version tag
// "v": 1 on every line. Numbers round-trip exactly (shortest representation
// that restores the same double), so write-then-read reproduces scenes
// bit for bit.

/// Single-line JSON encoding of one scene.
std::string scene_to_json(const Scene& s);
/// Throws InputError on schema violations (wrong version, malformed tracks,
/// unknown categories).
Scene scene_from_json(const std::string& text);

void write_scenes_jsonl(const std::string& path, std::span<const Scene> scenes);
/// Throws InputError naming the 1-based line number of the first bad record.
std::vector<Scene> read_scenes_jsonl(const std::string& path);

}  // namespace drivegen::scene
