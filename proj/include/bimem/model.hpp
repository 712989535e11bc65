#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "bimem/numerics.hpp"

namespace bimem {

// Shape of the classifier. hidden == 0 selects a linear softmax model.
struct Layout {
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::size_t categories = 0;

  std::size_t parameter_count() const noexcept;
  bool operator==(const Layout&) const = default;
};

// Flat parameter store for a one-hidden-layer tanh classifier.
//
// Storage order with a hidden layer: W1 (hidden x input, row-major), b1,
// W2 (categories x hidden, row-major), b2. Without one: W (categories x input),
// b. The layout is fixed at construction.
class ClassifierParams {
 public:
  ClassifierParams() = default;
  explicit ClassifierParams(Layout layout);

  // Every parameter drawn uniformly from [-scale, scale].
  static ClassifierParams random_uniform(Layout layout, double scale, std::mt19937_64& rng);

  const Layout& layout() const noexcept { return layout_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  // Views into the flat store. "first" is W1/b1 (or W/b when linear).
  std::span<const double> first_weights() const noexcept;
  std::span<const double> first_bias() const noexcept;
  std::span<const double> second_weights() const noexcept;
  std::span<const double> second_bias() const noexcept;

  bool operator==(const ClassifierParams&) const = default;

 private:
  Layout layout_{};
  std::vector<double> values_;
};

struct ForwardResult {
  FeatureVector feature;  // tanh hidden activation, or the input itself when linear
  ProbVector prob;
};

ForwardResult forward(const ClassifierParams& params, std::span<const double> x);

// -log prob[label], with prob floored at kProbFloor.
double cross_entropy_loss(std::span<const double> prob, Category label);

struct Example {
  std::span<const double> x;
  Category label = 0;
};

struct LossAndGradient {
  double loss = 0.0;              // mean cross-entropy over the batch
  std::vector<double> gradient;  // same order as ClassifierParams::values()
};

LossAndGradient loss_and_gradient(const ClassifierParams& params, std::span<const Example> batch);

// params -= lr * grad(mean cross-entropy). An empty batch is a no-op.
// Throws NumericFailure if the gradient is not finite.
void sgd_step(ClassifierParams& params, std::span<const Example> batch, double lr);

// Exponential moving average copy of a student model.
struct MomentumModel {
  ClassifierParams params;
  double gamma = 0.99;
};

// p_m <- gamma * p_m + (1 - gamma) * p for every parameter.
void momentum_update(MomentumModel& mm, const ClassifierParams& student);

}  // namespace bimem
