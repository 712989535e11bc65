#include "bimem/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bimem/errors.hpp"

namespace bimem {

std::size_t Layout::parameter_count() const noexcept {
  if (hidden == 0) return categories * input + categories;
  return hidden * input + hidden + categories * hidden + categories;
}

ClassifierParams::ClassifierParams(Layout layout) : layout_(layout) {
  if (layout.input == 0 || layout.categories == 0) {
    throw InvalidArgument("ClassifierParams: input and category counts must be positive");
  }
  values_.assign(layout.parameter_count(), 0.0);
}

ClassifierParams ClassifierParams::random_uniform(Layout layout, double scale, std::mt19937_64& rng) {
  ClassifierParams p(layout);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (double& v : p.values_) v = dist(rng);
  return p;
}

namespace {

struct Offsets {
  std::size_t first_w, first_b, second_w, second_b, end;
};

Offsets offsets_of(const Layout& l) {
  Offsets o{};
  o.first_w = 0;
  if (l.hidden == 0) {
    o.first_b = l.categories * l.input;
    o.second_w = o.second_b = o.end = o.first_b + l.categories;
  } else {
    o.first_b = l.hidden * l.input;
    o.second_w = o.first_b + l.hidden;
    o.second_b = o.second_w + l.categories * l.hidden;
    o.end = o.second_b + l.categories;
  }
  return o;
}

}  // namespace

std::span<const double> ClassifierParams::first_weights() const noexcept {
  const auto o = offsets_of(layout_);
  return std::span<const double>(values_).subspan(o.first_w, o.first_b - o.first_w);
}
std::span<const double> ClassifierParams::first_bias() const noexcept {
  const auto o = offsets_of(layout_);
  return std::span<const double>(values_).subspan(o.first_b, o.second_w - o.first_b);
}
std::span<const double> ClassifierParams::second_weights() const noexcept {
  const auto o = offsets_of(layout_);
  return std::span<const double>(values_).subspan(o.second_w, o.second_b - o.second_w);
}
std::span<const double> ClassifierParams::second_bias() const noexcept {
  const auto o = offsets_of(layout_);
  return std::span<const double>(values_).subspan(o.second_b, o.end - o.second_b);
}

namespace {

// out = W x + b, W is rows x cols row-major.
void affine(std::span<const double> w, std::span<const double> b, std::span<const double> x,
            std::span<double> out) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    double acc = b[r];
    const double* row = w.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

}  // namespace

ForwardResult forward(const ClassifierParams& params, std::span<const double> x) {
  const Layout& l = params.layout();
  if (x.size() != l.input) {
    throw InvalidArgument("forward: expected input of dimension " + std::to_string(l.input) +
                          ", got " + std::to_string(x.size()));
  }
  ForwardResult out;
  std::vector<double> logits(l.categories);
  if (l.hidden == 0) {
    out.feature.assign(x.begin(), x.end());
    affine(params.first_weights(), params.first_bias(), x, logits);
  } else {
    out.feature.resize(l.hidden);
    affine(params.first_weights(), params.first_bias(), x, out.feature);
    for (double& h : out.feature) h = std::tanh(h);
    affine(params.second_weights(), params.second_bias(), out.feature, logits);
  }
  out.prob = softmax(logits);
  return out;
}

double cross_entropy_loss(std::span<const double> prob, Category label) {
  if (label >= prob.size()) throw InvalidArgument("cross_entropy_loss: label out of range");
  return -std::log(std::max(prob[label], kProbFloor));
}

LossAndGradient loss_and_gradient(const ClassifierParams& params, std::span<const Example> batch) {
  const Layout& l = params.layout();
  const auto o = offsets_of(l);
  LossAndGradient out;
  out.gradient.assign(params.values().size(), 0.0);
  if (batch.empty()) return out;

  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<double> delta(l.categories);
  std::vector<double> hidden_delta(l.hidden);
  double* g = out.gradient.data();

  for (const Example& ex : batch) {
    if (ex.label >= l.categories) throw InvalidArgument("loss_and_gradient: label out of range");
    const ForwardResult fr = forward(params, ex.x);
    out.loss += cross_entropy_loss(fr.prob, ex.label) * scale;
    // d(-log softmax)/dlogits = prob - onehot
    for (std::size_t c = 0; c < l.categories; ++c) {
      delta[c] = (fr.prob[c] - (c == ex.label ? 1.0 : 0.0)) * scale;
    }
    // Gradient of the output affine layer; its input is the feature (x when linear).
    const std::size_t out_w = l.hidden == 0 ? o.first_w : o.second_w;
    const std::size_t out_b = l.hidden == 0 ? o.first_b : o.second_b;
    const std::span<const double> a = fr.feature;
    for (std::size_t c = 0; c < l.categories; ++c) {
      double* row = g + out_w + c * a.size();
      for (std::size_t j = 0; j < a.size(); ++j) row[j] += delta[c] * a[j];
      g[out_b + c] += delta[c];
    }
    if (l.hidden == 0) continue;

    const auto w2 = params.second_weights();
    for (std::size_t h = 0; h < l.hidden; ++h) {
      double acc = 0.0;
      for (std::size_t c = 0; c < l.categories; ++c) acc += w2[c * l.hidden + h] * delta[c];
      hidden_delta[h] = acc * (1.0 - fr.feature[h] * fr.feature[h]);
    }
    for (std::size_t h = 0; h < l.hidden; ++h) {
      double* row = g + o.first_w + h * l.input;
      for (std::size_t d = 0; d < l.input; ++d) row[d] += hidden_delta[h] * ex.x[d];
      g[o.first_b + h] += hidden_delta[h];
    }
  }
  return out;
}

void sgd_step(ClassifierParams& params, std::span<const Example> batch, double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("sgd_step: learning rate must be >= 0");
  if (batch.empty()) return;
  const LossAndGradient lg = loss_and_gradient(params, batch);
  for (double v : lg.gradient) {
    if (!std::isfinite(v)) throw NumericFailure("sgd_step: non-finite gradient");
  }
  auto values = params.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr * lg.gradient[i];
}

void momentum_update(MomentumModel& mm, const ClassifierParams& student) {
  if (!(mm.params.layout() == student.layout())) {
    throw InvalidArgument("momentum_update: layout mismatch");
  }
  const double gamma = mm.gamma;
  auto m = mm.params.values();
  const auto s = student.values();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = gamma * m[i] + (1.0 - gamma) * s[i];
}

}  // namespace bimem
