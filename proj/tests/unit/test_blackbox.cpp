#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "bimem/blackbox.hpp"
#include "bimem/rng.hpp"
#include "bimem/errors.hpp"
#include "bimem/kernels.hpp"

using namespace bimem;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bimem_test_blackbox";
  fs::create_directories(dir);
  return dir / name;
}

double held_out_accuracy(const ClassifierParams& m, const LabeledDataset& d) {
  const auto labels = kernels::hard_labels(kernels::forward_rows(m, d.features, d.dim));
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.size(); ++i) ok += labels[i] == d.labels[i];
  return double(ok) / double(d.size());
}

// Equal priors and shared isotropic covariance: the Bayes rule is the
// nearest class mean.
double bayes_accuracy(const LabeledDataset& d, const std::vector<FeatureVector>& means) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::size_t best = 0;
    double best_d2 = INFINITY;
    for (std::size_t c = 0; c < means.size(); ++c) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < d.dim; ++k) d2 += std::pow(d.row(i)[k] - means[c][k], 2);
      if (d2 < best_d2) best_d2 = d2, best = c;
    }
    ok += best == d.labels[i];
  }
  return double(ok) / double(d.size());
}

}  // namespace

TEST_CASE("train_source approaches the Bayes classifier on separable blobs") {
  ShiftedGaussianSpec s;
  s.categories = 2;
  s.dim = 2;
  s.class_separation = 5.0;
  s.n_per_class = 200;
  const auto train = gen_shifted_gaussians(s).source;
  s.seed = 99;
  s.n_per_class = 2000;
  const auto test = gen_shifted_gaussians(s).source;

  SourceTraining cfg;
  cfg.epochs = 50;
  const auto model = train_source(train, 2, cfg);
  const double acc = held_out_accuracy(model, test);
  const double bayes = bayes_accuracy(test, source_class_means(s));
  CHECK(acc >= 0.97);
  CHECK(acc >= bayes - 0.01);
}

TEST_CASE("train_source: zero epochs returns the initialization, seeds reproduce") {
  ShiftedGaussianSpec s;
  s.n_per_class = 10;
  const auto src = gen_shifted_gaussians(s).source;
  SourceTraining cfg;
  cfg.epochs = 0;
  auto rng = make_rng(cfg.seed, Stream::source_init);
  CHECK(train_source(src, 5, cfg) == ClassifierParams::random_uniform(Layout{8, 32, 5}, 0.1, rng));
  cfg.epochs = 3;
  CHECK(train_source(src, 5, cfg) == train_source(src, 5, cfg));
  CHECK_THROWS_AS(train_source(LabeledDataset{8, {}, {}, {}}, 5, cfg), InvalidArgument);
}

TEST_CASE("zero-weight model predicts uniform and label 0") {
  const ClassifierParams m(Layout{3, 0, 4});
  FeatureTable t{3, {5, 6, 7}, std::vector<double>(9, 1.5)};
  const auto p = predict_targets(m, t);
  CHECK(p.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(p.hard[i] == 0);
    for (double v : p.prob(i)) CHECK(v == doctest::Approx(0.25));
  }
}

TEST_CASE("exported predictions: one record per sample, argmax labels, nine-digit round trip") {
  ShiftedGaussianSpec s;
  s.n_per_class = 40;
  const auto dp = gen_shifted_gaussians(s);
  SourceTraining cfg;
  cfg.epochs = 5;
  const auto model = train_source(dp.source, 5, cfg);
  const auto path = scratch("p.csv");
  const auto preds = export_predictions(model, dp.target.strip_labels(), path);
  preds.validate();
  CHECK(preds.size() == dp.target.size());
  CHECK(std::set<SampleId>(preds.ids.begin(), preds.ids.end()).size() == preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) CHECK(preds.hard[i] == argmax_label(preds.prob(i)));

  const auto back = read_predictions(path);
  CHECK(back.ids == preds.ids);
  CHECK(back.hard == preds.hard);
  for (std::size_t i = 0; i < back.probs.size(); ++i) {
    CHECK(std::abs(back.probs[i] - preds.probs[i]) <= 5e-9 * std::abs(preds.probs[i]) + 1e-300);
  }
  // Reading and rewriting is a fixed point.
  const auto again = scratch("p2.csv");
  write_predictions(back, again);
  CHECK(read_predictions(again).probs == back.probs);

  std::ifstream f(path);
  std::string header;
  std::getline(f, header);
  CHECK(header == "id,yhat,p0,p1,p2,p3,p4");
  std::string first;
  std::getline(f, first);
  // The ground-truth label never reaches the file: id, yhat and C probabilities only.
  CHECK(std::count(first.begin(), first.end(), ',') == 6);
}

TEST_CASE("hard-only export smooths one-hot labels") {
  std::mt19937_64 rng(2);
  const auto m = ClassifierParams::random_uniform(Layout{2, 0, 4}, 1.0, rng);
  FeatureTable t{2, {0, 1}, {1.0, 2.0, -1.0, 0.5}};
  const auto soft = predict_targets(m, t);
  const auto hard = predict_targets(m, t, true);
  CHECK(hard.hard == soft.hard);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(hard.prob(i)[c] == doctest::Approx(c == hard.hard[i] ? 0.925 : 0.025));
    }
    CHECK(is_valid_prob(hard.prob(i)));
  }
}

TEST_CASE("prediction reader rejects malformed files") {
  const auto p = scratch("bad.csv");
  std::ofstream(p) << "id,yhat,p0,p1\n0,0,0.7,0.2\n";
  CHECK_THROWS_AS(read_predictions(p), DataError);
  std::ofstream(p) << "id,yhat,p0,p1\n0,2,0.5,0.5\n";
  CHECK_THROWS_AS(read_predictions(p), DataError);
  std::ofstream(p) << "id,yhat,p0,p1\n0,0,0.5,0.5\n0,0,0.5,0.5\n";
  CHECK_THROWS_AS(read_predictions(p), DataError);
  std::ofstream(p) << "id,label,p0,p1\n";
  CHECK_THROWS_AS(read_predictions(p), DataError);
}

TEST_CASE("align_predictions reorders and reports missing ids") {
  PredictionSet p;
  p.categories = 2;
  p.ids = {10, 20};
  p.hard = {0, 1};
  p.probs = {0.9, 0.1, 0.3, 0.7};
  const std::vector<SampleId> order{20, 10};
  const auto a = align_predictions(p, order);
  CHECK(a.ids == order);
  CHECK(a.hard == std::vector<Category>{1, 0});
  CHECK(a.probs == std::vector<double>{0.3, 0.7, 0.9, 0.1});
  const std::vector<SampleId> missing{30};
  CHECK_THROWS_AS(align_predictions(p, missing), DataError);
}

TEST_CASE("PredictionSet::validate") {
  PredictionSet p;
  p.categories = 2;
  p.ids = {1};
  p.hard = {1};
  p.probs = {0.9, 0.1};
  CHECK_THROWS_AS(p.validate(), DataError);
  p.hard = {0};
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("default benchmark leaves the source model noisy but useful on the target") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CAPTURE(seed);
    ShiftedGaussianSpec s;
    s.seed = seed;
    const auto dp = gen_shifted_gaussians(s);
    SourceTraining st;
    st.seed = seed;
    const auto preds = predict_targets(train_source(dp.source, s.categories, st), dp.target.strip_labels());
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) hit += preds.hard[i] == dp.target.labels[i];
    const double acc = double(hit) / double(preds.size());
    CHECK(acc >= 0.55);
    CHECK(acc <= 0.85);
  }
}
