#include "bimem/data.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "bimem/blackbox.hpp"
#include "bimem/csv.hpp"
#include "bimem/errors.hpp"

namespace bimem {

void LabeledDataset::validate(std::size_t categories) const {
  if (features.size() != ids.size() * dim || labels.size() != ids.size()) {
    throw DataError("dataset fields have inconsistent lengths");
  }
  std::unordered_set<SampleId> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!seen.insert(ids[i]).second) throw DataError("duplicate id " + std::to_string(ids[i]));
    if (categories != 0 && labels[i] >= categories) {
      throw DataError("label " + std::to_string(labels[i]) + " out of range for id " +
                      std::to_string(ids[i]));
    }
  }
}

FeatureTable LabeledDataset::strip_labels() const {
  return FeatureTable{dim, ids, features};
}

std::vector<FeatureVector> source_class_means(const ShiftedGaussianSpec& spec) {
  const std::size_t c_count = spec.categories;
  std::vector<FeatureVector> means(c_count, FeatureVector(spec.dim, 0.0));
  if (c_count <= spec.dim) {
    // Scaled basis vectors have pairwise distance separation; centre them.
    const double a = spec.class_separation / std::numbers::sqrt2;
    for (std::size_t c = 0; c < c_count; ++c) {
      for (std::size_t d = 0; d < c_count; ++d) {
        means[c][d] = (c == d ? a : 0.0) - a / static_cast<double>(c_count);
      }
    }
  } else {
    const double step = 2.0 * std::numbers::pi / static_cast<double>(c_count);
    const double radius = spec.class_separation / (2.0 * std::sin(step / 2.0));
    for (std::size_t c = 0; c < c_count; ++c) {
      means[c][0] = radius * std::cos(step * static_cast<double>(c));
      means[c][1] = radius * std::sin(step * static_cast<double>(c));
    }
  }
  return means;
}

FeatureVector resolved_target_shift(const ShiftedGaussianSpec& spec) {
  if (!spec.target_shift.empty()) {
    if (spec.target_shift.size() != spec.dim) {
      throw InvalidArgument("target_shift must have dimension " + std::to_string(spec.dim));
    }
    return spec.target_shift;
  }
  FeatureVector shift(spec.dim, 0.0);
  shift[0] = spec.shift_magnitude;
  return shift;
}

std::vector<FeatureVector> target_class_means(const ShiftedGaussianSpec& spec) {
  std::vector<FeatureVector> means = source_class_means(spec);
  const FeatureVector shift = resolved_target_shift(spec);
  const double theta = spec.target_rotation_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  for (FeatureVector& m : means) {
    const double x = m[0], y = m[1];
    m[0] = cs * x - sn * y;
    m[1] = sn * x + cs * y;
    for (std::size_t d = 0; d < m.size(); ++d) m[d] += shift[d];
  }
  return means;
}

namespace {

LabeledDataset sample_domain(const std::vector<FeatureVector>& means, const ShiftedGaussianSpec& spec,
                             std::mt19937_64& rng, SampleId first_id) {
  LabeledDataset ds;
  ds.dim = spec.dim;
  const std::size_t n = means.size() * spec.n_per_class;
  ds.ids.reserve(n);
  ds.labels.reserve(n);
  ds.features.reserve(n * spec.dim);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  // Classes are interleaved so that file order carries no label information.
  for (std::size_t i = 0; i < spec.n_per_class; ++i) {
    for (Category c = 0; c < means.size(); ++c) {
      ds.ids.push_back(first_id + static_cast<SampleId>(ds.ids.size()));
      ds.labels.push_back(c);
      for (std::size_t d = 0; d < spec.dim; ++d) ds.features.push_back(means[c][d] + noise(rng));
    }
  }
  return ds;
}

}  // namespace

DomainPair gen_shifted_gaussians(const ShiftedGaussianSpec& spec) {
  if (spec.categories < 2) throw InvalidArgument("gen_shifted_gaussians: need at least 2 categories");
  if (spec.dim < 2) throw InvalidArgument("gen_shifted_gaussians: need dimension >= 2");
  if (spec.n_per_class < 1) throw InvalidArgument("gen_shifted_gaussians: n_per_class must be >= 1");
  if (!(spec.noise_sigma >= 0.0) || !(spec.class_separation > 0.0)) {
    throw InvalidArgument("gen_shifted_gaussians: separation must be > 0 and sigma >= 0");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    0x6e6e6e6eu};
  std::mt19937_64 rng(seq);
  DomainPair out;
  out.source = sample_domain(source_class_means(spec), spec, rng, 0);
  out.target = sample_domain(target_class_means(spec), spec, rng, 0);
  return out;
}

LabeledDataset read_dataset(const std::filesystem::path& path, std::size_t categories) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("missing header", 1);

  const auto header = csv::split(line);
  if (header.size() < 3 || header.front() != "id" || header.back() != "label") {
    throw DataError("header must be id,f0,...,f{D-1},label", 1);
  }
  LabeledDataset ds;
  ds.dim = header.size() - 2;
  for (std::size_t d = 0; d < ds.dim; ++d) {
    if (header[d + 1] != "f" + std::to_string(d)) {
      throw DataError("unexpected header column '" + std::string(header[d + 1]) + "'", 1);
    }
  }

  std::unordered_set<SampleId> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = csv::split(line);
    if (fields.size() != header.size()) {
      throw DataError("expected " + std::to_string(header.size()) + " columns, got " +
                          std::to_string(fields.size()),
                      line_no);
    }
    const SampleId id = csv::parse_int(fields.front(), line_no);
    if (!seen.insert(id).second) throw DataError("duplicate id " + std::to_string(id), line_no);
    for (std::size_t d = 0; d < ds.dim; ++d) ds.features.push_back(csv::parse_real(fields[d + 1], line_no));
    const long long label = csv::parse_int(fields.back(), line_no);
    if (label < 0 || (categories != 0 && static_cast<std::size_t>(label) >= categories)) {
      throw DataError("label " + std::to_string(label) + " out of range", line_no);
    }
    ds.ids.push_back(id);
    ds.labels.push_back(static_cast<Category>(label));
  }
  return ds;
}

void write_dataset(const LabeledDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write dataset " + path.string());
  out << "id";
  for (std::size_t d = 0; d < dataset.dim; ++d) out << ",f" << d;
  out << ",label\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.ids[i];
    for (double v : dataset.row(i)) out << ',' << csv::format_real(v);
    out << ',' << dataset.labels[i] << '\n';
  }
  if (!out) throw FileError("write failed for " + path.string());
}

CorrectnessSplit split_by_initial_correctness(const LabeledDataset& target, const PredictionSet& preds) {
  std::unordered_map<SampleId, Category> hard;
  hard.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) hard.emplace(preds.ids[i], preds.hard[i]);
  CorrectnessSplit split;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const auto it = hard.find(target.ids[i]);
    if (it == hard.end()) throw DataError("no prediction for target id " + std::to_string(target.ids[i]));
    (it->second == target.labels[i] ? split.correct : split.incorrect).push_back(target.ids[i]);
  }
  return split;
}

}  // namespace bimem
