#pragma once

// JSON checkpoints for model parameters and memory state. Reals are written
// with round-trip precision, so save followed by load is lossless.

#include <filesystem>

#include "json.hpp"

#include "bimem/memory.hpp"
#include "bimem/model.hpp"

namespace bimem {

nlohmann::json params_to_json(const ClassifierParams& params);
ClassifierParams params_from_json(const nlohmann::json& j);
void save_params(const ClassifierParams& params, const std::filesystem::path& path);
ClassifierParams load_params(const std::filesystem::path& path);

struct MemorySnapshot {
  BiMemState state;
  FlowConfig flows;
};

nlohmann::json memory_to_json(const MemorySnapshot& snapshot);
MemorySnapshot memory_from_json(const nlohmann::json& j);
void save_memory(const MemorySnapshot& snapshot, const std::filesystem::path& path);
MemorySnapshot load_memory(const std::filesystem::path& path);

}  // namespace bimem
