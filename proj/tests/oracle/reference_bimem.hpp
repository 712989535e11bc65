#pragma once

// Straight-line reference of the memory-calibrated self-training loop, kept
// independent of the memory module, compared against run_bimem step by step.

#include <cstddef>
#include <string>

#include "bimem/adapt.hpp"

namespace reference {

struct Comparison {
  std::size_t iterations = 0;
  double max_abs_diff = 0.0;       // over features, probabilities, centroids
  std::size_t structural_mismatches = 0;  // ids, sizes, flags, labels
  std::string first_mismatch;
};

// Runs run_bimem and the reference side by side for cfg.iterations.
Comparison compare(const bimem::LabeledDataset& target, const bimem::PredictionSet& preds,
                   const bimem::AdaptConfig& cfg);

}  // namespace reference
