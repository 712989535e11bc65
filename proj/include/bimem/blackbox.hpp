#pragma once

// Source model training and the prediction file that is the only thing the
// adaptation stage receives from the source side.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bimem/data.hpp"
#include "bimem/model.hpp"

namespace bimem {

struct PredictionSet {
  std::size_t categories = 0;
  std::vector<SampleId> ids;
  std::vector<Category> hard;  // argmax of each probability row
  std::vector<double> probs;   // size() x categories

  std::size_t size() const noexcept { return ids.size(); }
  std::span<const double> prob(std::size_t i) const noexcept {
    return std::span<const double>(probs).subspan(i * categories, categories);
  }
  // Throws DataError when a row is not a valid ProbVector, when hard labels
  // disagree with the argmax, or on duplicate ids.
  void validate() const;
};

struct SourceTraining {
  std::size_t hidden = 32;
  std::size_t epochs = 50;
  double lr = 0.05;
  std::size_t batch_size = 32;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
};

// Minibatch SGD on mean cross-entropy. epochs == 0 returns the initialization.
ClassifierParams train_source(const LabeledDataset& source, std::size_t categories, const SourceTraining& cfg);

// Predictions of model on every target row. hard_only replaces each row by
// a one-hot vector smoothed with `smoothing` spread uniformly.
PredictionSet predict_targets(const ClassifierParams& model, const FeatureTable& target, bool hard_only = false,
                              double smoothing = 0.1);

// CSV with header "id,yhat,p0,...,p{C-1}", probabilities to 9 significant digits.
void write_predictions(const PredictionSet& preds, const std::filesystem::path& path);
PredictionSet read_predictions(const std::filesystem::path& path);

// predict_targets followed by write_predictions. Ground truth never reaches
// the file.
PredictionSet export_predictions(const ClassifierParams& model, const FeatureTable& target,
                                 const std::filesystem::path& path, bool hard_only = false);

// Rows of preds reordered to follow ids. Throws DataError for a missing id.
PredictionSet align_predictions(const PredictionSet& preds, std::span<const SampleId> ids);

}  // namespace bimem
