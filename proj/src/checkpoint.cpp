#include "bimem/checkpoint.hpp"

#include <fstream>

#include "bimem/errors.hpp"

namespace bimem {

namespace {

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write checkpoint " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw FileError("write failed for " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open checkpoint " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

nlohmann::json slot_to_json(const MemorySlot& s) {
  return {{"id", s.sample_id}, {"feature", s.feature}, {"prob", s.prob}};
}

MemorySlot slot_from_json(const nlohmann::json& j) {
  return MemorySlot{j.at("id").get<SampleId>(), j.at("feature").get<FeatureVector>(), j.at("prob").get<ProbVector>()};
}

nlohmann::json flows_to_json(const FlowConfig& f) {
  return {{"sm_to_st", f.sm_to_st},     {"sm_to_lt", f.sm_to_lt},     {"st_to_lt", f.st_to_lt},
          {"sm_from_st", f.sm_from_st}, {"sm_from_lt", f.sm_from_lt}, {"st_from_lt", f.st_from_lt}};
}

FlowConfig flows_from_json(const nlohmann::json& j) {
  return FlowConfig{j.at("sm_to_st").get<bool>(),   j.at("sm_to_lt").get<bool>(),   j.at("st_to_lt").get<bool>(),
                    j.at("sm_from_st").get<bool>(), j.at("sm_from_lt").get<bool>(), j.at("st_from_lt").get<bool>()};
}

}  // namespace

nlohmann::json params_to_json(const ClassifierParams& params) {
  const Layout& l = params.layout();
  return {{"kind", "classifier"},
          {"input", l.input},
          {"hidden", l.hidden},
          {"categories", l.categories},
          {"values", std::vector<double>(params.values().begin(), params.values().end())}};
}

ClassifierParams params_from_json(const nlohmann::json& j) {
  return guarded([&] {
    if (j.at("kind").get<std::string>() != "classifier") throw DataError("checkpoint is not a classifier");
    ClassifierParams p(Layout{j.at("input").get<std::size_t>(), j.at("hidden").get<std::size_t>(),
                              j.at("categories").get<std::size_t>()});
    const auto values = j.at("values").get<std::vector<double>>();
    if (values.size() != p.values().size()) throw DataError("checkpoint parameter count does not match its layout");
    std::copy(values.begin(), values.end(), p.values().begin());
    return p;
  });
}

void save_params(const ClassifierParams& params, const std::filesystem::path& path) {
  write_json(params_to_json(params), path);
}

ClassifierParams load_params(const std::filesystem::path& path) { return params_from_json(read_json(path)); }

nlohmann::json memory_to_json(const MemorySnapshot& snap) {
  const BiMemState& s = snap.state;
  nlohmann::json sensory = nlohmann::json::array();
  for (const MemorySlot& slot : s.sensory.slots) sensory.push_back(slot_to_json(slot));
  nlohmann::json queue = nlohmann::json::array();
  for (const MemorySlot& slot : s.short_term.queue) queue.push_back(slot_to_json(slot));
  return {
      {"kind", "bimem_memory"},
      {"config",
       {{"categories", s.categories},
        {"dim", s.dim},
        {"top_n", s.top_n},
        {"queue_capacity", s.short_term.capacity},
        {"long_term_momentum", s.long_term.momentum},
        {"flows", flows_to_json(snap.flows)}}},
      {"sensory", sensory},
      {"short_term", queue},
      {"long_term", {{"centroids", s.long_term.centroids}, {"initialized", s.long_term.initialized}}},
      {"counters", {{"total_enqueued", s.total_enqueued}, {"total_evicted", s.total_evicted}}},
      {"diagnostics",
       {{"degenerate_reweights", s.diagnostics.degenerate_reweights},
        {"skipped_short_term_calibrations", s.diagnostics.skipped_short_term_calibrations},
        {"unanchored_sensory_slots", s.diagnostics.unanchored_sensory_slots}}},
  };
}

MemorySnapshot memory_from_json(const nlohmann::json& j) {
  return guarded([&] {
    if (j.at("kind").get<std::string>() != "bimem_memory") throw DataError("checkpoint is not a memory snapshot");
    const auto& cfg = j.at("config");
    MemorySnapshot snap;
    snap.state = make_bimem_state(cfg.at("categories").get<std::size_t>(), cfg.at("dim").get<std::size_t>(),
                                  cfg.at("top_n").get<std::size_t>(), cfg.at("queue_capacity").get<std::size_t>(),
                                  cfg.at("long_term_momentum").get<double>());
    snap.flows = flows_from_json(cfg.at("flows"));
    BiMemState& s = snap.state;
    for (const auto& slot : j.at("sensory")) s.sensory.slots.push_back(slot_from_json(slot));
    for (const auto& slot : j.at("short_term")) s.short_term.queue.push_back(slot_from_json(slot));
    if (s.short_term.queue.size() > s.short_term.capacity) throw DataError("short-term queue exceeds its capacity");
    s.long_term.centroids = j.at("long_term").at("centroids").get<std::vector<FeatureVector>>();
    s.long_term.initialized = j.at("long_term").at("initialized").get<std::vector<bool>>();
    if (s.long_term.centroids.size() != s.categories || s.long_term.initialized.size() != s.categories) {
      throw DataError("long-term memory does not have one centroid per category");
    }
    s.total_enqueued = j.at("counters").at("total_enqueued").get<std::uint64_t>();
    s.total_evicted = j.at("counters").at("total_evicted").get<std::uint64_t>();
    const auto& d = j.at("diagnostics");
    s.diagnostics.degenerate_reweights = d.at("degenerate_reweights").get<std::uint64_t>();
    s.diagnostics.skipped_short_term_calibrations = d.at("skipped_short_term_calibrations").get<std::uint64_t>();
    s.diagnostics.unanchored_sensory_slots = d.at("unanchored_sensory_slots").get<std::uint64_t>();
    return snap;
  });
}

void save_memory(const MemorySnapshot& snapshot, const std::filesystem::path& path) {
  write_json(memory_to_json(snapshot), path);
}

MemorySnapshot load_memory(const std::filesystem::path& path) { return memory_from_json(read_json(path)); }

}  // namespace bimem
