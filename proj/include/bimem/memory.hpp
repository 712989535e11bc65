#pragma once

// Sensory, short-term and long-term memories with the forward memorization
// and backward calibration flows between them.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "bimem/data.hpp"
#include "bimem/numerics.hpp"

namespace bimem {

struct MemorySlot {
  SampleId sample_id = 0;
  FeatureVector feature;  // momentum-model feature
  ProbVector prob;        // most recent (possibly calibrated) prediction

  bool operator==(const MemorySlot&) const = default;
};

// Current batch only; replaced wholesale every iteration.
struct SensoryMemory {
  std::vector<MemorySlot> slots;
};

// FIFO of hard samples, bounded by capacity.
struct ShortTermMemory {
  std::deque<MemorySlot> queue;
  std::size_t capacity = 256;
};

// Per-category feature centroids updated by momentum. A class that has never
// received a contributor is uninitialized: its centroid stays at zero and it
// is excluded from every calibration softmax.
struct LongTermCentroids {
  std::vector<FeatureVector> centroids;
  std::vector<bool> initialized;
  double momentum = 0.9;  // weight on the old centroid

  static LongTermCentroids empty(std::size_t categories, std::size_t dim, double momentum);
  bool any_initialized() const noexcept;
  bool operator==(const LongTermCentroids&) const = default;
};

// Category-wise means of a slot set. counts[c] == 0 marks class c absent.
struct CentroidSet {
  std::vector<FeatureVector> centroids;
  std::vector<std::size_t> counts;

  bool present(std::size_t c) const noexcept { return counts[c] > 0; }
};

// The six memory flows that can be switched off for ablations.
struct FlowConfig {
  bool sm_to_st = true;    // active selection into the short-term queue
  bool sm_to_lt = true;    // sensory evictions consolidate into long-term
  bool st_to_lt = true;    // short-term evictions consolidate into long-term
  bool sm_from_st = true;  // sensory calibrated by short-term centroids
  bool sm_from_lt = true;  // sensory calibrated by long-term centroids
  bool st_from_lt = true;  // short-term calibrated by long-term centroids

  static FlowConfig all_on() { return {}; }
  static FlowConfig all_off() { return {false, false, false, false, false, false}; }
  // e.g. "SM->ST+SM<-ST", or "none".
  std::string label() const;
  bool operator==(const FlowConfig&) const = default;
};

// Counted, non-fatal conditions encountered while calibrating.
struct MemoryDiagnostics {
  std::uint64_t degenerate_reweights = 0;         // all-zero product, fell back to uniform
  std::uint64_t skipped_short_term_calibrations = 0;  // no initialized long-term centroid
  std::uint64_t unanchored_sensory_slots = 0;     // no centroid available under active flows

  bool operator==(const MemoryDiagnostics&) const = default;
};

// Replaces the sensory contents with batch and returns what was there before.
std::vector<MemorySlot> sensory_refresh(SensoryMemory& mem, std::vector<MemorySlot> batch);

// The n highest-entropy slots, highest first; ties go to the lower sample id.
std::vector<MemorySlot> select_hard(const SensoryMemory& mem, std::size_t n);

// Appends incoming and evicts from the front only as far as needed to respect
// capacity. Returns evicted slots in eviction order.
std::vector<MemorySlot> short_term_update(ShortTermMemory& mem, std::vector<MemorySlot> incoming);

// Slot category is argmax of its stored probability.
CentroidSet compute_centroids(std::span<const MemorySlot> slots, std::size_t categories);

// Pools the enabled eviction sets, then for every class with contributors:
// first write sets the centroid, later writes blend
// (1 - momentum) * batch + momentum * old.
void long_term_consolidate(LongTermCentroids& lt, std::span<const MemorySlot> evicted_sensory,
                           std::span<const MemorySlot> evicted_short, const FlowConfig& flows);

// Calibration weights of one feature against the initialized long-term
// centroids: softmax of negative L1 distance, zero for uninitialized classes.
// Empty when no class is initialized.
std::vector<double> long_term_weights(std::span<const double> feature, const LongTermCentroids& lt);

// Reweights every queued probability by its long-term weights and
// renormalizes. Returns false (and counts it) when no centroid is initialized.
bool calibrate_short_term(ShortTermMemory& mem, const LongTermCentroids& lt, MemoryDiagnostics& diag);

struct SensoryCalibration {
  std::vector<ProbVector> probs;
  // anchored[k] is true when at least one centroid term produced probs[k];
  // false means probs[k] is the slot's unchanged input.
  std::vector<bool> anchored;
};

// Distance-to-centroid posteriors for arbitrary features (row-major, dim
// columns), without touching any memory. Rows with no available centroid get
// an empty ProbVector and anchored = false.
SensoryCalibration centroid_posteriors(std::span<const double> features, std::size_t dim,
                                       const LongTermCentroids& lt, const CentroidSet& st,
                                       const FlowConfig& flows);

// Assigns every sensory slot the softmax over classes of the summed negative
// L1 distances to the enabled, present centroids.
SensoryCalibration calibrate_sensory(SensoryMemory& mem, const LongTermCentroids& lt, const CentroidSet& st,
                                     const FlowConfig& flows, MemoryDiagnostics& diag);

struct BiMemState {
  SensoryMemory sensory;
  ShortTermMemory short_term;
  LongTermCentroids long_term;
  std::size_t top_n = 1;
  std::size_t categories = 0;
  std::size_t dim = 0;
  std::uint64_t total_enqueued = 0;
  std::uint64_t total_evicted = 0;
  MemoryDiagnostics diagnostics;
};

BiMemState make_bimem_state(std::size_t categories, std::size_t dim, std::size_t top_n, std::size_t capacity,
                            double long_term_momentum);

// One pass of forward memorization then backward calibration over a freshly
// encoded batch. Returns the calibrated sensory probabilities.
SensoryCalibration bimem_step(BiMemState& state, std::vector<MemorySlot> batch, const FlowConfig& flows);

// Centroids of the current short-term queue; all absent when it is empty.
CentroidSet short_term_centroids(const BiMemState& state);

}  // namespace bimem
