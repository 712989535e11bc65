#pragma once

// Self-training on black-box pseudo labels: the memory-calibrated loop and
// two memory-free baselines.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bimem/blackbox.hpp"
#include "bimem/data.hpp"
#include "bimem/eval.hpp"
#include "bimem/memory.hpp"
#include "bimem/model.hpp"

namespace bimem {

enum class Method { bimem, vanilla_st, confidence_st };

std::string_view method_name(Method m) noexcept;
// Throws InvalidArgument for unknown names.
Method parse_method(std::string_view name);

struct AdaptConfig {
  Method method = Method::bimem;
  std::size_t iterations = 3000;
  // Leading iterations trained on the black-box labels. Memories are still
  // updated; baselines do not regenerate labels before it ends.
  std::size_t warmup_iterations = 500;
  std::size_t batch_size = 64;       // K
  double lr = 0.02;
  double gamma = 0.999;              // momentum model EMA
  double gamma_prime = 0.99;         // long-term centroid momentum (weight on old)
  std::size_t top_n = 0;             // N; 0 selects batch_size / 4
  std::size_t queue_capacity = 256;  // M
  FlowConfig flows;
  std::size_t refresh_interval = 0;  // R for the baselines; 0 selects one epoch
  double confidence_quantile = 0.5;  // q for confidence_st
  std::size_t eval_interval = 100;
  std::size_t hidden = 32;
  double init_scale = 0.1;
  std::uint64_t seed = 0;

  std::size_t resolved_top_n() const noexcept;
  // Throws InvalidArgument on any out-of-range setting.
  void validate() const;
};

// Shuffled passes over [0, n): each index appears exactly once per epoch.
// The final batch of an epoch is short when batch_size does not divide n.
class EpochSampler {
 public:
  EpochSampler(std::size_t n, std::size_t batch_size, std::mt19937_64 rng);
  std::vector<std::size_t> next();
  std::size_t batches_per_epoch() const noexcept;

 private:
  std::size_t batch_size_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_;
};

// Denoised label: argmax of calibrated * blackbox. Falls back to the
// black-box label when the sample was not calibrated (empty span) or the
// product vanishes.
Category denoise_label(std::span<const double> calibrated, std::span<const double> blackbox, Category blackbox_label);

struct RunResult {
  ClassifierParams model;
  RunTrace trace;
};

// Called after every training iteration of run_bimem with the memory state,
// the calibrated sensory probabilities and the labels used for the update.
using BiMemObserver = std::function<void(std::size_t iter, const BiMemState& state,
                                         const SensoryCalibration& calibration, std::span<const Category> labels)>;

// Ground truth in `target` is used only to build the trace; the training path
// receives the features with labels stripped.
RunResult run_bimem(const LabeledDataset& target, const PredictionSet& preds, const AdaptConfig& cfg,
                    const BiMemObserver& observer = {});
RunResult run_vanilla_st(const LabeledDataset& target, const PredictionSet& preds, const AdaptConfig& cfg);
RunResult run_confidence_st(const LabeledDataset& target, const PredictionSet& preds, const AdaptConfig& cfg);
// Dispatches on cfg.method.
RunResult run_adaptation(const LabeledDataset& target, const PredictionSet& preds, const AdaptConfig& cfg);

// Per predicted class, marks the ceil(q * n_c) rows with the highest
// confidence in that class; ties go to the lower row.
std::vector<bool> select_confident(std::span<const Category> labels, std::span<const double> probs,
                                   std::size_t categories, double quantile);

struct AblationRow {
  std::size_t row = 0;  // 1-based
  FlowConfig flows;
  std::vector<double> final_acc;  // one per seed, in seed order
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single seed
};

// The seven flow combinations of the ablation table, from no memory to all
// flows.
std::vector<FlowConfig> ablation_flow_rows();

// run_bimem for every (row, seed) cell. Cells run in parallel; output order is
// fixed by row and seed.
std::vector<AblationRow> run_ablation_suite(const LabeledDataset& target, const PredictionSet& preds,
                                            const AdaptConfig& base_cfg, std::span<const std::uint64_t> seeds);

}  // namespace bimem
