#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bimem/blackbox.hpp"
#include "bimem/data.hpp"

namespace bimem {

double accuracy(std::span<const Category> predicted, std::span<const Category> truth);

// Accuracy restricted to the given row indices; nullopt for an empty subset.
std::optional<double> subset_accuracy(std::span<const Category> predicted, std::span<const Category> truth,
                                      std::span<const std::size_t> subset);

struct TracePoint {
  std::size_t iter = 0;
  double acc_all = 0.0;
  std::optional<double> acc_init_correct;
  std::optional<double> acc_init_incorrect;
  std::optional<double> pl_acc_denoised;
  double pl_acc_blackbox = 0.0;

  bool operator==(const TracePoint&) const = default;
};

struct RunTrace {
  std::vector<TracePoint> points;
  bool operator==(const RunTrace&) const = default;
};

inline constexpr std::string_view kTraceHeader =
    "iter,acc_all,acc_init_correct,acc_init_incorrect,pl_acc_denoised,pl_acc_blackbox";

// Column values in trace order; absent entries are skipped.
std::vector<double> trace_column(const RunTrace& trace, std::string_view column);

// max(column) - final(column) over the present values. Throws InvalidArgument
// for an unknown column or an empty trace; nullopt when the column is absent
// throughout.
std::optional<double> peak_final_drop(const RunTrace& trace, std::string_view column);

// Absent values are written as empty fields.
void write_trace(const RunTrace& trace, const std::filesystem::path& path);
RunTrace read_trace(const std::filesystem::path& path);

// Holds the ground truth of the target domain and answers metric queries.
// The adaptation loops only ever see this interface, never the labels.
class Evaluator {
 public:
  Evaluator(const LabeledDataset& target, const PredictionSet& aligned_preds);

  struct Metrics {
    double acc_all = 0.0;
    std::optional<double> acc_init_correct;
    std::optional<double> acc_init_incorrect;
  };
  Metrics evaluate(std::span<const Category> predicted) const;

  // Accuracy of a pseudo-labelling over the rows with mask set (all rows when
  // mask is empty); nullopt when no row is selected.
  std::optional<double> label_accuracy(std::span<const Category> labels, const std::vector<bool>& mask = {}) const;

  double blackbox_accuracy() const noexcept { return blackbox_accuracy_; }
  std::size_t n_correct() const noexcept { return correct_.size(); }
  std::size_t n_incorrect() const noexcept { return incorrect_.size(); }

 private:
  std::vector<Category> truth_;
  std::vector<std::size_t> correct_;
  std::vector<std::size_t> incorrect_;
  double blackbox_accuracy_ = 0.0;
};

// Sidecar written next to every trace so that reports can label rows and
// check the subset decomposition.
struct TraceMeta {
  std::string method;
  std::uint64_t seed = 0;
  std::size_t n_correct = 0;
  std::size_t n_incorrect = 0;
};

std::filesystem::path meta_path_for(const std::filesystem::path& trace_path);
void write_trace_meta(const TraceMeta& meta, const std::filesystem::path& trace_path);
TraceMeta read_trace_meta(const std::filesystem::path& trace_path);

// acc_all == (n_c * acc_correct + n_i * acc_incorrect) / (n_c + n_i) at every
// point. Throws DataError naming the first violating iteration.
void check_partition_identity(const RunTrace& trace, const TraceMeta& meta, double tolerance = 1e-9);

struct SummaryRow {
  std::string method;
  std::uint64_t seed = 0;
  double final_acc = 0.0;
  double peak_acc = 0.0;
  std::optional<double> drop_incorrect_subset;
};

SummaryRow summarize(const RunTrace& trace, const TraceMeta& meta);
// Header "method,seed,final_acc,peak_acc,drop_incorrect_subset".
void write_summary(std::span<const SummaryRow> rows, const std::filesystem::path& path);

}  // namespace bimem
