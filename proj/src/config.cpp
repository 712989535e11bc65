#include "bimem/config.hpp"

#include <fstream>
#include <functional>
#include <map>

namespace bimem {

void PipelineConfig::propagate_seed() {
  data.seed = seed;
  source.seed = seed;
  adapt.seed = seed;
}

PipelineConfig default_config() {
  PipelineConfig cfg;
  cfg.propagate_seed();
  return cfg;
}

namespace {

using Setter = std::function<void(PipelineConfig&, const nlohmann::json&)>;

template <typename T>
T get_as(const std::string& key, const nlohmann::json& v) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(key, "expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
      throw ConfigError(key, "expected a nonnegative integer");
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(key, "expected a number");
  } else {
    if (!v.is_string()) throw ConfigError(key, "expected a string");
  }
  return v.get<T>();
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    const auto add = [&t](const std::string& key, auto&& apply) {
      t[key] = [key, apply](PipelineConfig& c, const nlohmann::json& v) { apply(c, key, v); };
    };
    using J = nlohmann::json;
    using S = std::size_t;
    add("seed", [](PipelineConfig& c, const std::string& k, const J& v) { c.seed = get_as<std::uint64_t>(k, v); });
    add("num_classes", [](PipelineConfig& c, const std::string& k, const J& v) { c.data.categories = get_as<S>(k, v); });
    add("dim", [](PipelineConfig& c, const std::string& k, const J& v) { c.data.dim = get_as<S>(k, v); });
    add("n_per_class", [](PipelineConfig& c, const std::string& k, const J& v) { c.data.n_per_class = get_as<S>(k, v); });
    add("class_separation",
        [](PipelineConfig& c, const std::string& k, const J& v) { c.data.class_separation = get_as<double>(k, v); });
    add("noise_sigma", [](PipelineConfig& c, const std::string& k, const J& v) { c.data.noise_sigma = get_as<double>(k, v); });
    add("shift_magnitude",
        [](PipelineConfig& c, const std::string& k, const J& v) { c.data.shift_magnitude = get_as<double>(k, v); });
    add("target_shift", [](PipelineConfig& c, const std::string& k, const J& v) {
      if (v.is_null()) {
        c.data.target_shift.clear();
        return;
      }
      if (!v.is_array()) throw ConfigError(k, "expected an array of numbers or null");
      c.data.target_shift.clear();
      for (const J& x : v) c.data.target_shift.push_back(get_as<double>(k, x));
    });
    add("rotation_deg",
        [](PipelineConfig& c, const std::string& k, const J& v) { c.data.target_rotation_deg = get_as<double>(k, v); });
    add("hidden", [](PipelineConfig& c, const std::string& k, const J& v) {
      c.source.hidden = c.adapt.hidden = get_as<S>(k, v);
    });
    add("init_scale", [](PipelineConfig& c, const std::string& k, const J& v) {
      c.source.init_scale = c.adapt.init_scale = get_as<double>(k, v);
    });
    add("source_epochs", [](PipelineConfig& c, const std::string& k, const J& v) { c.source.epochs = get_as<S>(k, v); });
    add("source_lr", [](PipelineConfig& c, const std::string& k, const J& v) { c.source.lr = get_as<double>(k, v); });
    add("source_batch_size",
        [](PipelineConfig& c, const std::string& k, const J& v) { c.source.batch_size = get_as<S>(k, v); });
    add("hard_only", [](PipelineConfig& c, const std::string& k, const J& v) { c.hard_only = get_as<bool>(k, v); });
    add("method", [](PipelineConfig& c, const std::string& k, const J& v) {
      try {
        c.adapt.method = parse_method(get_as<std::string>(k, v));
      } catch (const ConfigError&) {
        throw;
      } catch (const InvalidArgument& e) {
        throw ConfigError(k, e.what());
      }
    });
    add("iterations", [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.iterations = get_as<S>(k, v); });
    add("warmup_iterations",
        [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.warmup_iterations = get_as<S>(k, v); });
    add("batch_size", [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.batch_size = get_as<S>(k, v); });
    add("lr", [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.lr = get_as<double>(k, v); });
    add("gamma", [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.gamma = get_as<double>(k, v); });
    add("gamma_prime", [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.gamma_prime = get_as<double>(k, v); });
    add("top_n", [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.top_n = get_as<S>(k, v); });
    add("queue_capacity",
        [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.queue_capacity = get_as<S>(k, v); });
    add("refresh_interval",
        [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.refresh_interval = get_as<S>(k, v); });
    add("confidence_quantile",
        [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.confidence_quantile = get_as<double>(k, v); });
    add("eval_interval", [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.eval_interval = get_as<S>(k, v); });
    add("flow_sm_to_st", [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.flows.sm_to_st = get_as<bool>(k, v); });
    add("flow_sm_to_lt", [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.flows.sm_to_lt = get_as<bool>(k, v); });
    add("flow_st_to_lt", [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.flows.st_to_lt = get_as<bool>(k, v); });
    add("flow_sm_from_st",
        [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.flows.sm_from_st = get_as<bool>(k, v); });
    add("flow_sm_from_lt",
        [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.flows.sm_from_lt = get_as<bool>(k, v); });
    add("flow_st_from_lt",
        [](PipelineConfig& c, const std::string& k, const J& v) { c.adapt.flows.st_from_lt = get_as<bool>(k, v); });
    return t;
  }();
  return table;
}

}  // namespace

PipelineConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  PipelineConfig cfg = default_config();
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown key");
    try {
      it->second(cfg, value);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(key, e.what());
    }
  }
  cfg.propagate_seed();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["num_classes"] = c.data.categories;
  j["dim"] = c.data.dim;
  j["n_per_class"] = c.data.n_per_class;
  j["class_separation"] = c.data.class_separation;
  j["noise_sigma"] = c.data.noise_sigma;
  j["shift_magnitude"] = c.data.shift_magnitude;
  j["target_shift"] = c.data.target_shift.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.data.target_shift);
  j["rotation_deg"] = c.data.target_rotation_deg;
  j["hidden"] = c.adapt.hidden;
  j["init_scale"] = c.adapt.init_scale;
  j["source_epochs"] = c.source.epochs;
  j["source_lr"] = c.source.lr;
  j["source_batch_size"] = c.source.batch_size;
  j["hard_only"] = c.hard_only;
  j["method"] = std::string(method_name(c.adapt.method));
  j["iterations"] = c.adapt.iterations;
  j["warmup_iterations"] = c.adapt.warmup_iterations;
  j["batch_size"] = c.adapt.batch_size;
  j["lr"] = c.adapt.lr;
  j["gamma"] = c.adapt.gamma;
  j["gamma_prime"] = c.adapt.gamma_prime;
  j["top_n"] = c.adapt.resolved_top_n();
  j["queue_capacity"] = c.adapt.queue_capacity;
  j["refresh_interval"] = c.adapt.refresh_interval;
  j["confidence_quantile"] = c.adapt.confidence_quantile;
  j["eval_interval"] = c.adapt.eval_interval;
  j["flow_sm_to_st"] = c.adapt.flows.sm_to_st;
  j["flow_sm_to_lt"] = c.adapt.flows.sm_to_lt;
  j["flow_st_to_lt"] = c.adapt.flows.st_to_lt;
  j["flow_sm_from_st"] = c.adapt.flows.sm_from_st;
  j["flow_sm_from_lt"] = c.adapt.flows.sm_from_lt;
  j["flow_st_from_lt"] = c.adapt.flows.st_from_lt;
  return j;
}

}  // namespace bimem
