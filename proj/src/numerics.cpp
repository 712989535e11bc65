#include "bimem/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bimem/errors.hpp"

namespace bimem {

bool is_valid_prob(std::span<const double> p) noexcept {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= kProbSumTolerance;
}

ProbVector softmax(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("softmax: empty score vector");
  for (double s : scores) {
    if (!std::isfinite(s)) throw InvalidArgument("softmax: non-finite score");
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  ProbVector out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - top);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double entropy(std::span<const double> p) {
  if (!is_valid_prob(p)) throw InvalidArgument("entropy: not a probability vector");
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("l1_distance: dimension mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

Category argmax_label(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("argmax_label: empty input");
  Category best = 0;
  for (Category c = 1; c < values.size(); ++c) {
    if (values[c] > values[best]) best = c;
  }
  return best;
}

ProbVector reweight_normalize(std::span<const double> p, std::span<const double> w) {
  if (p.size() != w.size()) throw InvalidArgument("reweight_normalize: length mismatch");
  ProbVector out(p.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (!(w[c] >= 0.0) || !std::isfinite(w[c])) {
      throw InvalidArgument("reweight_normalize: weights must be finite and nonnegative");
    }
    out[c] = p[c] * w[c];
    sum += out[c];
  }
  if (!(sum > 0.0)) throw DegenerateCalibration("reweight_normalize: all products are zero");
  for (double& v : out) v /= sum;
  return out;
}

ProbVector uniform_prob(std::size_t categories) {
  if (categories == 0) throw InvalidArgument("uniform_prob: zero categories");
  return ProbVector(categories, 1.0 / static_cast<double>(categories));
}

}  // namespace bimem
