#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bimem/numerics.hpp"

namespace bimem {

using SampleId = std::int64_t;

// Target features without ground truth. This is all the adaptation loop sees.
struct FeatureTable {
  std::size_t dim = 0;
  std::vector<SampleId> ids;
  std::vector<double> features;  // row-major, size() x dim

  std::size_t size() const noexcept { return ids.size(); }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(features).subspan(i * dim, dim);
  }
};

struct LabeledDataset {
  std::size_t dim = 0;
  std::vector<SampleId> ids;
  std::vector<double> features;  // row-major, size() x dim
  std::vector<Category> labels;

  std::size_t size() const noexcept { return ids.size(); }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(features).subspan(i * dim, dim);
  }

  // Throws DataError on inconsistent sizes, duplicate ids, or labels >= categories.
  void validate(std::size_t categories) const;
  FeatureTable strip_labels() const;
  bool operator==(const LabeledDataset&) const = default;
};

struct ShiftedGaussianSpec {
  std::size_t categories = 5;
  std::size_t dim = 8;
  std::size_t n_per_class = 200;
  double class_separation = 4.0;  // pairwise distance between source class means
  double noise_sigma = 1.0;
  // Translation applied to every target mean. Empty selects the default
  // direction (first coordinate axis) scaled to shift_magnitude.
  FeatureVector target_shift;
  double shift_magnitude = 1.5;
  double target_rotation_deg = 25.0;  // rotation in the (f0, f1) plane
  std::uint64_t seed = 0;
};

struct DomainPair {
  LabeledDataset source;
  LabeledDataset target;
};

// Class means of the source domain: vertices of a regular simplex when
// categories <= dim, otherwise points on a circle in the first two coordinates.
std::vector<FeatureVector> source_class_means(const ShiftedGaussianSpec& spec);
std::vector<FeatureVector> target_class_means(const ShiftedGaussianSpec& spec);
FeatureVector resolved_target_shift(const ShiftedGaussianSpec& spec);

DomainPair gen_shifted_gaussians(const ShiftedGaussianSpec& spec);

// CSV with header "id,f0,...,f{D-1},label"; reals written with 9 significant
// digits. categories == 0 disables the label range check.
LabeledDataset read_dataset(const std::filesystem::path& path, std::size_t categories = 0);
void write_dataset(const LabeledDataset& dataset, const std::filesystem::path& path);

struct PredictionSet;

struct CorrectnessSplit {
  std::vector<SampleId> correct;
  std::vector<SampleId> incorrect;
};

// Partitions target ids by whether the black-box label matches ground truth.
CorrectnessSplit split_by_initial_correctness(const LabeledDataset& target, const PredictionSet& preds);

}  // namespace bimem
