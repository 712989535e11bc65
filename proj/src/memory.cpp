#include "bimem/memory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bimem/errors.hpp"
#include "bimem/kernels.hpp"

namespace bimem {

namespace {

// Below this many rows the distance table is computed serially; a parallel
// region costs more than the work.
constexpr std::size_t kParallelRows = 512;

kernels::Exec exec_for(std::size_t rows) {
  return rows >= kParallelRows ? kernels::Exec::parallel : kernels::Exec::serial;
}

void check_slot_shapes(std::span<const MemorySlot> slots, const char* who) {
  if (slots.empty()) return;
  const std::size_t d = slots.front().feature.size();
  const std::size_t c = slots.front().prob.size();
  for (const MemorySlot& s : slots) {
    if (s.feature.size() != d || s.prob.size() != c) {
      throw InvalidArgument(std::string(who) + ": slots disagree on feature or category dimension");
    }
  }
}

// Softmax of `scores` over the classes flagged in `active`, zero elsewhere.
ProbVector masked_softmax(std::span<const double> scores, const std::vector<bool>& active) {
  std::vector<double> compact;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (active[c]) compact.push_back(scores[c]);
  }
  const ProbVector sm = softmax(compact);
  ProbVector out(scores.size(), 0.0);
  std::size_t j = 0;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (active[c]) out[c] = sm[j++];
  }
  return out;
}

}  // namespace

LongTermCentroids LongTermCentroids::empty(std::size_t categories, std::size_t dim, double momentum) {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("long-term momentum must lie in [0, 1)");
  LongTermCentroids lt;
  lt.centroids.assign(categories, FeatureVector(dim, 0.0));
  lt.initialized.assign(categories, false);
  lt.momentum = momentum;
  return lt;
}

bool LongTermCentroids::any_initialized() const noexcept {
  return std::any_of(initialized.begin(), initialized.end(), [](bool b) { return b; });
}

std::string FlowConfig::label() const {
  std::string out;
  const auto add = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(sm_to_st, "SM->ST");
  add(sm_to_lt, "SM->LT");
  add(st_to_lt, "ST->LT");
  add(sm_from_st, "SM<-ST");
  add(sm_from_lt, "SM<-LT");
  add(st_from_lt, "ST<-LT");
  return out.empty() ? "none" : out;
}

std::vector<MemorySlot> sensory_refresh(SensoryMemory& mem, std::vector<MemorySlot> batch) {
  if (batch.empty()) throw InvalidArgument("sensory_refresh: empty batch");
  check_slot_shapes(batch, "sensory_refresh");
  std::vector<MemorySlot> evicted = std::move(mem.slots);
  mem.slots = std::move(batch);
  return evicted;
}

std::vector<MemorySlot> select_hard(const SensoryMemory& mem, std::size_t n) {
  if (n < 1 || n > mem.slots.size()) {
    throw InvalidArgument("select_hard: n must lie in [1, " + std::to_string(mem.slots.size()) + "]");
  }
  std::vector<double> h(mem.slots.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = entropy(mem.slots[i].prob);
  std::vector<std::size_t> order(h.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (h[a] != h[b]) return h[a] > h[b];
    return mem.slots[a].sample_id < mem.slots[b].sample_id;
  });
  std::vector<MemorySlot> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(mem.slots[order[i]]);
  return out;
}

std::vector<MemorySlot> short_term_update(ShortTermMemory& mem, std::vector<MemorySlot> incoming) {
  if (incoming.size() > mem.capacity) {
    throw InvalidArgument("short_term_update: " + std::to_string(incoming.size()) + " slots exceed capacity " +
                          std::to_string(mem.capacity));
  }
  for (MemorySlot& s : incoming) mem.queue.push_back(std::move(s));
  std::vector<MemorySlot> evicted;
  while (mem.queue.size() > mem.capacity) {
    evicted.push_back(std::move(mem.queue.front()));
    mem.queue.pop_front();
  }
  return evicted;
}

CentroidSet compute_centroids(std::span<const MemorySlot> slots, std::size_t categories) {
  if (slots.empty()) throw InvalidArgument("compute_centroids: no slots");
  check_slot_shapes(slots, "compute_centroids");
  if (slots.front().prob.size() != categories) {
    throw InvalidArgument("compute_centroids: slot probabilities do not have " + std::to_string(categories) +
                          " categories");
  }
  const std::size_t dim = slots.front().feature.size();
  CentroidSet out;
  out.centroids.assign(categories, FeatureVector(dim, 0.0));
  out.counts.assign(categories, 0);
  for (const MemorySlot& s : slots) {
    const Category c = argmax_label(s.prob);
    ++out.counts[c];
    for (std::size_t d = 0; d < dim; ++d) out.centroids[c][d] += s.feature[d];
  }
  for (std::size_t c = 0; c < categories; ++c) {
    if (out.counts[c] == 0) continue;
    const double inv = 1.0 / static_cast<double>(out.counts[c]);
    for (double& v : out.centroids[c]) v *= inv;
  }
  return out;
}

void long_term_consolidate(LongTermCentroids& lt, std::span<const MemorySlot> evicted_sensory,
                           std::span<const MemorySlot> evicted_short, const FlowConfig& flows) {
  std::vector<MemorySlot> pool;
  if (flows.sm_to_lt) pool.insert(pool.end(), evicted_sensory.begin(), evicted_sensory.end());
  if (flows.st_to_lt) pool.insert(pool.end(), evicted_short.begin(), evicted_short.end());
  if (pool.empty()) return;

  const CentroidSet batch = compute_centroids(pool, lt.centroids.size());
  const double keep = lt.momentum;
  for (std::size_t c = 0; c < batch.counts.size(); ++c) {
    if (!batch.present(c)) continue;
    FeatureVector& target = lt.centroids[c];
    if (target.size() != batch.centroids[c].size()) {
      throw InvalidArgument("long_term_consolidate: feature dimension mismatch");
    }
    if (!lt.initialized[c]) {
      target = batch.centroids[c];
      lt.initialized[c] = true;
      continue;
    }
    for (std::size_t d = 0; d < target.size(); ++d) {
      target[d] = (1.0 - keep) * batch.centroids[c][d] + keep * target[d];
    }
  }
}

std::vector<double> long_term_weights(std::span<const double> feature, const LongTermCentroids& lt) {
  if (!lt.any_initialized()) return {};
  std::vector<double> scores(lt.centroids.size(), 0.0);
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (lt.initialized[c]) scores[c] = -l1_distance(feature, lt.centroids[c]);
  }
  return masked_softmax(scores, lt.initialized);
}

namespace {

// Flattened centroid matrix and the class index of each row.
struct CentroidRows {
  std::vector<double> values;
  std::vector<std::size_t> classes;
};

}  // namespace

bool calibrate_short_term(ShortTermMemory& mem, const LongTermCentroids& lt, MemoryDiagnostics& diag) {
  if (!lt.any_initialized()) {
    ++diag.skipped_short_term_calibrations;
    return false;
  }
  if (mem.queue.empty()) return true;
  const std::size_t dim = lt.centroids.front().size();
  const std::size_t categories = lt.centroids.size();

  CentroidRows rows;
  for (std::size_t c = 0; c < categories; ++c) {
    if (!lt.initialized[c]) continue;
    rows.values.insert(rows.values.end(), lt.centroids[c].begin(), lt.centroids[c].end());
    rows.classes.push_back(c);
  }
  std::vector<double> points;
  points.reserve(mem.queue.size() * dim);
  for (const MemorySlot& s : mem.queue) {
    if (s.feature.size() != dim) throw InvalidArgument("calibrate_short_term: feature dimension mismatch");
    points.insert(points.end(), s.feature.begin(), s.feature.end());
  }
  const std::vector<double> dist = kernels::l1_table(points, rows.values, dim, exec_for(mem.queue.size()));

  const std::size_t k = rows.classes.size();
  std::vector<double> scores(k);
  std::vector<double> w(categories);
  for (std::size_t m = 0; m < mem.queue.size(); ++m) {
    for (std::size_t j = 0; j < k; ++j) scores[j] = -dist[m * k + j];
    const ProbVector sm = softmax(scores);
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t j = 0; j < k; ++j) w[rows.classes[j]] = sm[j];
    MemorySlot& slot = mem.queue[m];
    try {
      slot.prob = reweight_normalize(slot.prob, w);
    } catch (const DegenerateCalibration&) {
      ++diag.degenerate_reweights;
      slot.prob = uniform_prob(categories);
    }
  }
  return true;
}

SensoryCalibration centroid_posteriors(std::span<const double> features, std::size_t dim,
                                       const LongTermCentroids& lt, const CentroidSet& st,
                                       const FlowConfig& flows) {
  if (dim == 0 || features.size() % dim != 0) throw InvalidArgument("centroid_posteriors: ragged features");
  const std::size_t n = features.size() / dim;
  const std::size_t categories = lt.centroids.size();
  if (st.counts.size() != categories) throw InvalidArgument("centroid_posteriors: category count mismatch");

  // Each enabled source contributes one table of distances against its
  // present centroids. A class present in only some enabled sources has the
  // missing terms filled with the mean of its present ones, so absence from
  // one memory is neither a bonus nor a penalty.
  const std::size_t sources = std::size_t{flows.sm_from_lt} + std::size_t{flows.sm_from_st};
  std::vector<std::size_t> terms(categories, 0);
  std::vector<double> scores_all(n * categories, 0.0);
  const auto accumulate = [&](const std::vector<FeatureVector>& centroids, auto&& is_present) {
    CentroidRows rows;
    for (std::size_t c = 0; c < categories; ++c) {
      if (!is_present(c)) continue;
      if (centroids[c].size() != dim) throw InvalidArgument("centroid_posteriors: feature dimension mismatch");
      rows.values.insert(rows.values.end(), centroids[c].begin(), centroids[c].end());
      rows.classes.push_back(c);
      ++terms[c];
    }
    if (rows.classes.empty()) return;
    const std::vector<double> dist = kernels::l1_table(features, rows.values, dim, exec_for(n));
    const std::size_t k = rows.classes.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) scores_all[i * categories + rows.classes[j]] -= dist[i * k + j];
    }
  };
  if (flows.sm_from_lt) accumulate(lt.centroids, [&](std::size_t c) { return bool(lt.initialized[c]); });
  if (flows.sm_from_st) accumulate(st.centroids, [&](std::size_t c) { return st.present(c); });

  std::vector<bool> active(categories, false);
  for (std::size_t c = 0; c < categories; ++c) {
    active[c] = terms[c] > 0;
    if (!active[c] || terms[c] == sources) continue;
    const double fill = static_cast<double>(sources) / static_cast<double>(terms[c]);
    for (std::size_t i = 0; i < n; ++i) scores_all[i * categories + c] *= fill;
  }

  SensoryCalibration out;
  out.probs.resize(n);
  out.anchored.assign(n, false);
  if (std::none_of(active.begin(), active.end(), [](bool b) { return b; })) return out;
  for (std::size_t i = 0; i < n; ++i) {
    out.probs[i] = masked_softmax(std::span<const double>(scores_all).subspan(i * categories, categories), active);
    out.anchored[i] = true;
  }
  return out;
}

SensoryCalibration calibrate_sensory(SensoryMemory& mem, const LongTermCentroids& lt, const CentroidSet& st,
                                     const FlowConfig& flows, MemoryDiagnostics& diag) {
  SensoryCalibration out;
  const std::size_t n = mem.slots.size();
  if (!flows.sm_from_lt && !flows.sm_from_st) {
    out.probs.reserve(n);
    for (const MemorySlot& s : mem.slots) out.probs.push_back(s.prob);
    out.anchored.assign(n, false);
    return out;
  }
  const std::size_t dim = lt.centroids.empty() ? 0 : lt.centroids.front().size();
  std::vector<double> features;
  features.reserve(n * dim);
  for (const MemorySlot& s : mem.slots) {
    if (s.feature.size() != dim) throw InvalidArgument("calibrate_sensory: feature dimension mismatch");
    features.insert(features.end(), s.feature.begin(), s.feature.end());
  }
  out = centroid_posteriors(features, dim, lt, st, flows);
  for (std::size_t k = 0; k < n; ++k) {
    if (out.anchored[k]) {
      mem.slots[k].prob = out.probs[k];
    } else {
      ++diag.unanchored_sensory_slots;
      out.probs[k] = mem.slots[k].prob;
    }
  }
  return out;
}

BiMemState make_bimem_state(std::size_t categories, std::size_t dim, std::size_t top_n, std::size_t capacity,
                            double long_term_momentum) {
  if (categories == 0 || dim == 0) throw InvalidArgument("make_bimem_state: empty shape");
  if (top_n < 1 || top_n > capacity) throw InvalidArgument("make_bimem_state: need 1 <= top_n <= capacity");
  BiMemState s;
  s.short_term.capacity = capacity;
  s.long_term = LongTermCentroids::empty(categories, dim, long_term_momentum);
  s.top_n = top_n;
  s.categories = categories;
  s.dim = dim;
  return s;
}

CentroidSet short_term_centroids(const BiMemState& state) {
  if (state.short_term.queue.empty()) {
    return CentroidSet{std::vector<FeatureVector>(state.categories, FeatureVector(state.dim, 0.0)),
                       std::vector<std::size_t>(state.categories, 0)};
  }
  const std::vector<MemorySlot> slots(state.short_term.queue.begin(), state.short_term.queue.end());
  return compute_centroids(slots, state.categories);
}

SensoryCalibration bimem_step(BiMemState& state, std::vector<MemorySlot> batch, const FlowConfig& flows) {
  for (const MemorySlot& s : batch) {
    if (s.feature.size() != state.dim || s.prob.size() != state.categories) {
      throw InvalidArgument("bimem_step: batch shape does not match memory state");
    }
  }
  // Forward memorization.
  const std::vector<MemorySlot> evicted_sensory = sensory_refresh(state.sensory, std::move(batch));
  std::vector<MemorySlot> evicted_short;
  if (flows.sm_to_st) {
    const std::size_t n = std::min(state.top_n, state.sensory.slots.size());
    std::vector<MemorySlot> hard = select_hard(state.sensory, n);
    state.total_enqueued += hard.size();
    evicted_short = short_term_update(state.short_term, std::move(hard));
    state.total_evicted += evicted_short.size();
  }
  long_term_consolidate(state.long_term, evicted_sensory, evicted_short, flows);

  // Backward calibration.
  if (flows.st_from_lt) calibrate_short_term(state.short_term, state.long_term, state.diagnostics);
  const CentroidSet st = short_term_centroids(state);
  return calibrate_sensory(state.sensory, state.long_term, st, flows, state.diagnostics);
}

}  // namespace bimem
