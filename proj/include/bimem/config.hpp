#pragma once

// Flat JSON configuration shared by every CLI subcommand. Unknown keys are
// rejected so that typos in hyperparameter names fail loudly.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "bimem/adapt.hpp"
#include "bimem/blackbox.hpp"
#include "bimem/data.hpp"
#include "bimem/errors.hpp"

namespace bimem {

class ConfigError : public InvalidArgument {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : InvalidArgument("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  ShiftedGaussianSpec data;
  SourceTraining source;
  AdaptConfig adapt;
  bool hard_only = false;

  // Copies the single seed into every stage.
  void propagate_seed();
};

PipelineConfig default_config();

// Defaults overlaid with the keys present in j.
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

// Every key with its resolved value.
nlohmann::json to_json(const PipelineConfig& cfg);

}  // namespace bimem
