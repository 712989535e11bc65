#pragma once

// Data-parallel kernels. Each has a serial reference and an OpenMP version
// that writes every output element with the same arithmetic, so the two are
// bit-identical; tests hold them to that.

#include <cstddef>
#include <span>
#include <vector>

#include "bimem/model.hpp"

namespace bimem::kernels {

enum class Exec { serial, parallel };

struct BatchForward {
  std::size_t rows = 0;
  std::size_t feature_dim = 0;
  std::size_t categories = 0;
  std::vector<double> features;  // rows x feature_dim
  std::vector<double> probs;     // rows x categories

  std::span<const double> feature(std::size_t i) const noexcept {
    return std::span<const double>(features).subspan(i * feature_dim, feature_dim);
  }
  std::span<const double> prob(std::size_t i) const noexcept {
    return std::span<const double>(probs).subspan(i * categories, categories);
  }
};

// forward() over every row of a row-major matrix with `dim` columns.
BatchForward forward_rows_serial(const ClassifierParams& params, std::span<const double> rows, std::size_t dim);
BatchForward forward_rows_parallel(const ClassifierParams& params, std::span<const double> rows, std::size_t dim);
BatchForward forward_rows(const ClassifierParams& params, std::span<const double> rows, std::size_t dim,
                          Exec exec = Exec::parallel);

// argmax of each probability row.
std::vector<Category> hard_labels(const BatchForward& out);

// out[i * k + j] = || points[i] - centroids[j] ||_1 for k = centroids.size() / dim.
std::vector<double> l1_table_serial(std::span<const double> points, std::span<const double> centroids,
                                    std::size_t dim);
std::vector<double> l1_table_parallel(std::span<const double> points, std::span<const double> centroids,
                                      std::size_t dim);
std::vector<double> l1_table(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                             Exec exec = Exec::parallel);

int max_threads() noexcept;

}  // namespace bimem::kernels
