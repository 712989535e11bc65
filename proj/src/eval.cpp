#include "bimem/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include "json.hpp"

#include "bimem/csv.hpp"
#include "bimem/errors.hpp"

namespace bimem {

double accuracy(std::span<const Category> predicted, std::span<const Category> truth) {
  if (predicted.size() != truth.size()) throw InvalidArgument("accuracy: length mismatch");
  if (predicted.empty()) throw InvalidArgument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::optional<double> subset_accuracy(std::span<const Category> predicted, std::span<const Category> truth,
                                      std::span<const std::size_t> subset) {
  if (predicted.size() != truth.size()) throw InvalidArgument("subset_accuracy: length mismatch");
  if (subset.empty()) return std::nullopt;
  std::size_t hits = 0;
  for (std::size_t i : subset) {
    if (i >= truth.size()) throw InvalidArgument("subset_accuracy: index outside evaluated rows");
    hits += predicted[i] == truth[i];
  }
  return static_cast<double>(hits) / static_cast<double>(subset.size());
}

namespace {

constexpr std::array<std::string_view, 6> kColumns = {"iter",           "acc_all",         "acc_init_correct",
                                                      "acc_init_incorrect", "pl_acc_denoised", "pl_acc_blackbox"};

std::optional<double> column_value(const TracePoint& p, std::size_t column) {
  switch (column) {
    case 0: return static_cast<double>(p.iter);
    case 1: return p.acc_all;
    case 2: return p.acc_init_correct;
    case 3: return p.acc_init_incorrect;
    case 4: return p.pl_acc_denoised;
    default: return p.pl_acc_blackbox;
  }
}

std::size_t column_index(std::string_view column) {
  const auto it = std::find(kColumns.begin(), kColumns.end(), column);
  if (it == kColumns.end()) throw InvalidArgument("unknown trace column '" + std::string(column) + "'");
  return static_cast<std::size_t>(it - kColumns.begin());
}

// Traces carry ratios of counts; 17 digits keeps them exact through a round trip.
std::string format_exact(double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string format_optional(const std::optional<double>& v) { return v ? format_exact(*v) : std::string(); }

std::optional<double> parse_optional(std::string_view field, std::size_t line) {
  if (field.empty()) return std::nullopt;
  return csv::parse_real(field, line);
}

}  // namespace

std::vector<double> trace_column(const RunTrace& trace, std::string_view column) {
  const std::size_t idx = column_index(column);
  std::vector<double> out;
  for (const TracePoint& p : trace.points) {
    if (auto v = column_value(p, idx)) out.push_back(*v);
  }
  return out;
}

std::optional<double> peak_final_drop(const RunTrace& trace, std::string_view column) {
  if (trace.points.empty()) throw InvalidArgument("peak_final_drop: empty trace");
  const std::vector<double> values = trace_column(trace, column);
  if (values.empty()) return std::nullopt;
  return *std::max_element(values.begin(), values.end()) - values.back();
}

void write_trace(const RunTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write trace " + path.string());
  out << kTraceHeader << '\n';
  for (const TracePoint& p : trace.points) {
    out << p.iter << ',' << format_exact(p.acc_all) << ',' << format_optional(p.acc_init_correct) << ','
        << format_optional(p.acc_init_incorrect) << ',' << format_optional(p.pl_acc_denoised) << ','
        << format_exact(p.pl_acc_blackbox) << '\n';
  }
  if (!out) throw FileError("write failed for " + path.string());
}

RunTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open trace " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw DataError("trace header must be " + std::string(kTraceHeader), 1);
  RunTrace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line);
    if (f.size() != kColumns.size()) throw DataError("expected 6 columns", line_no);
    TracePoint p;
    const long long iter = csv::parse_int(f[0], line_no);
    if (iter < 0) throw DataError("negative iteration", line_no);
    p.iter = static_cast<std::size_t>(iter);
    if (!trace.points.empty() && p.iter <= trace.points.back().iter) {
      throw DataError("iterations must be strictly increasing", line_no);
    }
    p.acc_all = csv::parse_real(f[1], line_no);
    p.acc_init_correct = parse_optional(f[2], line_no);
    p.acc_init_incorrect = parse_optional(f[3], line_no);
    p.pl_acc_denoised = parse_optional(f[4], line_no);
    p.pl_acc_blackbox = csv::parse_real(f[5], line_no);
    trace.points.push_back(p);
  }
  return trace;
}

Evaluator::Evaluator(const LabeledDataset& target, const PredictionSet& aligned_preds) : truth_(target.labels) {
  if (aligned_preds.ids != target.ids) throw InvalidArgument("Evaluator: predictions are not aligned to the target");
  for (std::size_t i = 0; i < truth_.size(); ++i) {
    (aligned_preds.hard[i] == truth_[i] ? correct_ : incorrect_).push_back(i);
  }
  if (!truth_.empty()) blackbox_accuracy_ = accuracy(aligned_preds.hard, truth_);
}

Evaluator::Metrics Evaluator::evaluate(std::span<const Category> predicted) const {
  Metrics m;
  m.acc_all = accuracy(predicted, truth_);
  m.acc_init_correct = subset_accuracy(predicted, truth_, correct_);
  m.acc_init_incorrect = subset_accuracy(predicted, truth_, incorrect_);
  return m;
}

std::optional<double> Evaluator::label_accuracy(std::span<const Category> labels, const std::vector<bool>& mask) const {
  if (labels.size() != truth_.size()) throw InvalidArgument("label_accuracy: length mismatch");
  if (!mask.empty() && mask.size() != truth_.size()) throw InvalidArgument("label_accuracy: mask length mismatch");
  std::size_t hits = 0, total = 0;
  for (std::size_t i = 0; i < truth_.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    ++total;
    hits += labels[i] == truth_[i];
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::filesystem::path meta_path_for(const std::filesystem::path& trace_path) {
  std::filesystem::path p = trace_path;
  p += ".meta.json";
  return p;
}

void write_trace_meta(const TraceMeta& meta, const std::filesystem::path& trace_path) {
  const nlohmann::json j = {{"method", meta.method},
                            {"seed", meta.seed},
                            {"n_init_correct", meta.n_correct},
                            {"n_init_incorrect", meta.n_incorrect}};
  std::ofstream out(meta_path_for(trace_path));
  if (!out) throw FileError("cannot write " + meta_path_for(trace_path).string());
  out << j.dump(2) << '\n';
}

TraceMeta read_trace_meta(const std::filesystem::path& trace_path) {
  const auto path = meta_path_for(trace_path);
  std::ifstream in(path);
  if (!in) throw DataError("missing trace metadata " + path.string());
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    return TraceMeta{j.at("method").get<std::string>(), j.at("seed").get<std::uint64_t>(),
                     j.at("n_init_correct").get<std::size_t>(), j.at("n_init_incorrect").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed trace metadata " + path.string() + ": " + e.what());
  }
}

void check_partition_identity(const RunTrace& trace, const TraceMeta& meta, double tolerance) {
  const double nc = static_cast<double>(meta.n_correct), ni = static_cast<double>(meta.n_incorrect);
  if (nc + ni == 0.0) throw DataError("trace metadata describes an empty target set");
  for (const TracePoint& p : trace.points) {
    if ((nc > 0) != p.acc_init_correct.has_value() || (ni > 0) != p.acc_init_incorrect.has_value()) {
      throw DataError("subset columns disagree with subset sizes at iteration " + std::to_string(p.iter));
    }
    const double mixed = (nc * p.acc_init_correct.value_or(0.0) + ni * p.acc_init_incorrect.value_or(0.0)) / (nc + ni);
    if (std::abs(mixed - p.acc_all) > tolerance) {
      throw DataError("partition identity violated at iteration " + std::to_string(p.iter));
    }
  }
}

SummaryRow summarize(const RunTrace& trace, const TraceMeta& meta) {
  if (trace.points.empty()) throw DataError("empty trace");
  const std::vector<double> all = trace_column(trace, "acc_all");
  return SummaryRow{meta.method, meta.seed, all.back(), *std::max_element(all.begin(), all.end()),
                    peak_final_drop(trace, "acc_init_incorrect")};
}

void write_summary(std::span<const SummaryRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write summary " + path.string());
  out << "method,seed,final_acc,peak_acc,drop_incorrect_subset\n";
  for (const SummaryRow& r : rows) {
    out << r.method << ',' << r.seed << ',' << format_exact(r.final_acc) << ',' << format_exact(r.peak_acc) << ','
        << format_optional(r.drop_incorrect_subset) << '\n';
  }
  if (!out) throw FileError("write failed for " + path.string());
}

}  // namespace bimem
