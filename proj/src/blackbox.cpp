#include "bimem/blackbox.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "bimem/csv.hpp"
#include "bimem/errors.hpp"
#include "bimem/kernels.hpp"
#include "bimem/rng.hpp"

namespace bimem {

void PredictionSet::validate() const {
  if (hard.size() != ids.size() || probs.size() != ids.size() * categories) {
    throw DataError("prediction set fields have inconsistent lengths");
  }
  std::unordered_set<SampleId> seen;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!seen.insert(ids[i]).second) throw DataError("duplicate prediction id " + std::to_string(ids[i]));
    if (!is_valid_prob(prob(i))) throw DataError("invalid probability row for id " + std::to_string(ids[i]));
    if (hard[i] != argmax_label(prob(i))) {
      throw DataError("yhat is not the argmax of the probabilities for id " + std::to_string(ids[i]));
    }
  }
}

ClassifierParams train_source(const LabeledDataset& source, std::size_t categories, const SourceTraining& cfg) {
  if (source.size() == 0) throw InvalidArgument("train_source: empty source dataset");
  if (cfg.batch_size == 0) throw InvalidArgument("train_source: batch_size must be positive");
  source.validate(categories);

  auto init_rng = make_rng(cfg.seed, Stream::source_init);
  ClassifierParams params =
      ClassifierParams::random_uniform(Layout{source.dim, cfg.hidden, categories}, cfg.init_scale, init_rng);

  auto shuffle_rng = make_rng(cfg.seed, Stream::source_shuffle);
  std::vector<std::size_t> order(source.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Example> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back({source.row(order[i]), source.labels[order[i]]});
      sgd_step(params, batch, cfg.lr);
    }
  }
  return params;
}

PredictionSet predict_targets(const ClassifierParams& model, const FeatureTable& target, bool hard_only,
                              double smoothing) {
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw InvalidArgument("predict_targets: smoothing must be in [0, 1)");
  const kernels::BatchForward fwd = kernels::forward_rows(model, target.features, target.dim);
  PredictionSet out;
  out.categories = model.layout().categories;
  out.ids = target.ids;
  out.hard = kernels::hard_labels(fwd);
  out.probs = fwd.probs;
  if (hard_only) {
    const double floor = smoothing / static_cast<double>(out.categories);
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t c = 0; c < out.categories; ++c) {
        out.probs[i * out.categories + c] = floor + (c == out.hard[i] ? 1.0 - smoothing : 0.0);
      }
    }
  }
  return out;
}

void write_predictions(const PredictionSet& preds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write predictions " + path.string());
  out << "id,yhat";
  for (std::size_t c = 0; c < preds.categories; ++c) out << ",p" << c;
  out << '\n';
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out << preds.ids[i] << ',' << preds.hard[i];
    for (double v : preds.prob(i)) out << ',' << csv::format_real(v);
    out << '\n';
  }
  if (!out) throw FileError("write failed for " + path.string());
}

PredictionSet read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open predictions " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("missing header", 1);
  const auto header = csv::split(line);
  if (header.size() < 3 || header[0] != "id" || header[1] != "yhat") {
    throw DataError("header must be id,yhat,p0,...,p{C-1}", 1);
  }
  PredictionSet preds;
  preds.categories = header.size() - 2;
  for (std::size_t c = 0; c < preds.categories; ++c) {
    if (header[c + 2] != "p" + std::to_string(c)) {
      throw DataError("unexpected header column '" + std::string(header[c + 2]) + "'", 1);
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
    const SampleId id = csv::parse_int(fields[0], line_no);
    if (!seen.insert(id).second) throw DataError("duplicate id " + std::to_string(id), line_no);
    const long long yhat = csv::parse_int(fields[1], line_no);
    if (yhat < 0 || static_cast<std::size_t>(yhat) >= preds.categories) {
      throw DataError("yhat " + std::to_string(yhat) + " out of range", line_no);
    }
    const std::size_t first = preds.probs.size();
    for (std::size_t c = 0; c < preds.categories; ++c) preds.probs.push_back(csv::parse_real(fields[c + 2], line_no));
    const std::span<const double> row(preds.probs.data() + first, preds.categories);
    if (!is_valid_prob(row)) throw DataError("probabilities do not form a distribution", line_no);
    preds.ids.push_back(id);
    preds.hard.push_back(static_cast<Category>(yhat));
  }
  return preds;
}

PredictionSet export_predictions(const ClassifierParams& model, const FeatureTable& target,
                                 const std::filesystem::path& path, bool hard_only) {
  PredictionSet preds = predict_targets(model, target, hard_only);
  write_predictions(preds, path);
  return preds;
}

PredictionSet align_predictions(const PredictionSet& preds, std::span<const SampleId> ids) {
  std::unordered_map<SampleId, std::size_t> where;
  where.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) where.emplace(preds.ids[i], i);
  PredictionSet out;
  out.categories = preds.categories;
  out.ids.assign(ids.begin(), ids.end());
  out.hard.reserve(ids.size());
  out.probs.reserve(ids.size() * preds.categories);
  for (SampleId id : ids) {
    const auto it = where.find(id);
    if (it == where.end()) throw DataError("no prediction for target id " + std::to_string(id));
    out.hard.push_back(preds.hard[it->second]);
    const auto p = preds.prob(it->second);
    out.probs.insert(out.probs.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace bimem
