#include "bimem/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "bimem/errors.hpp"

#ifdef BIMEM_HAVE_OPENMP
#include <omp.h>
#endif

namespace bimem::kernels {

namespace {

BatchForward allocate(const ClassifierParams& params, std::span<const double> rows, std::size_t dim) {
  const Layout& l = params.layout();
  if (dim != l.input) {
    throw InvalidArgument("forward_rows: row dimension " + std::to_string(dim) + " does not match model input " +
                          std::to_string(l.input));
  }
  if (dim == 0 || rows.size() % dim != 0) throw InvalidArgument("forward_rows: ragged row matrix");
  BatchForward out;
  out.rows = rows.size() / dim;
  out.feature_dim = l.hidden == 0 ? l.input : l.hidden;
  out.categories = l.categories;
  out.features.resize(out.rows * out.feature_dim);
  out.probs.resize(out.rows * out.categories);
  return out;
}

void forward_one(const ClassifierParams& params, std::span<const double> rows, std::size_t dim, std::size_t i,
                 BatchForward& out) {
  const ForwardResult fr = forward(params, rows.subspan(i * dim, dim));
  std::copy(fr.feature.begin(), fr.feature.end(), out.features.begin() + i * out.feature_dim);
  std::copy(fr.prob.begin(), fr.prob.end(), out.probs.begin() + i * out.categories);
}

std::vector<double> allocate_table(std::span<const double> points, std::span<const double> centroids,
                                   std::size_t dim) {
  if (dim == 0 || points.size() % dim != 0 || centroids.size() % dim != 0) {
    throw InvalidArgument("l1_table: ragged input");
  }
  return std::vector<double>((points.size() / dim) * (centroids.size() / dim));
}

inline double l1_row(const double* a, const double* b, std::size_t dim) {
  double d = 0.0;
  for (std::size_t j = 0; j < dim; ++j) d += std::abs(a[j] - b[j]);
  return d;
}

}  // namespace

BatchForward forward_rows_serial(const ClassifierParams& params, std::span<const double> rows, std::size_t dim) {
  BatchForward out = allocate(params, rows, dim);
  for (std::size_t i = 0; i < out.rows; ++i) forward_one(params, rows, dim, i, out);
  return out;
}

BatchForward forward_rows_parallel(const ClassifierParams& params, std::span<const double> rows,
                                   std::size_t dim) {
  BatchForward out = allocate(params, rows, dim);
  const auto n = static_cast<std::ptrdiff_t>(out.rows);
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      forward_one(params, rows, dim, static_cast<std::size_t>(i), out);
    } catch (...) {
#pragma omp critical(bimem_kernel_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

BatchForward forward_rows(const ClassifierParams& params, std::span<const double> rows, std::size_t dim,
                          Exec exec) {
  return exec == Exec::serial ? forward_rows_serial(params, rows, dim) : forward_rows_parallel(params, rows, dim);
}

std::vector<Category> hard_labels(const BatchForward& out) {
  std::vector<Category> labels(out.rows);
  for (std::size_t i = 0; i < out.rows; ++i) labels[i] = argmax_label(out.prob(i));
  return labels;
}

std::vector<double> l1_table_serial(std::span<const double> points, std::span<const double> centroids,
                                    std::size_t dim) {
  std::vector<double> out = allocate_table(points, centroids, dim);
  const std::size_t n = points.size() / dim, k = centroids.size() / dim;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) out[i * k + c] = l1_row(&points[i * dim], &centroids[c * dim], dim);
  }
  return out;
}

std::vector<double> l1_table_parallel(std::span<const double> points, std::span<const double> centroids,
                                      std::size_t dim) {
  std::vector<double> out = allocate_table(points, centroids, dim);
  const auto n = static_cast<std::ptrdiff_t>(points.size() / dim);
  const std::size_t k = centroids.size() / dim;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    for (std::size_t c = 0; c < k; ++c) out[row * k + c] = l1_row(&points[row * dim], &centroids[c * dim], dim);
  }
  return out;
}

std::vector<double> l1_table(std::span<const double> points, std::span<const double> centroids, std::size_t dim,
                             Exec exec) {
  return exec == Exec::serial ? l1_table_serial(points, centroids, dim) : l1_table_parallel(points, centroids, dim);
}

int max_threads() noexcept {
#ifdef BIMEM_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace bimem::kernels
