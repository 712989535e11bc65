#include "doctest.h"

#include <chrono>

#include "bimem/adapt.hpp"
#include "bimem/blackbox.hpp"
#include "bimem/data.hpp"
#include "reference_bimem.hpp"

using namespace bimem;

namespace {

struct Instance {
  LabeledDataset target;
  PredictionSet preds;
};

Instance small_instance(std::uint64_t seed) {
  ShiftedGaussianSpec s;
  s.categories = 3;
  s.dim = 2;
  s.n_per_class = 100;
  s.seed = seed;
  const auto dp = gen_shifted_gaussians(s);
  SourceTraining st;
  st.hidden = 8;
  st.epochs = 5;
  st.seed = seed;
  const auto model = train_source(dp.source, s.categories, st);
  return {dp.target, predict_targets(model, dp.target.strip_labels())};
}

AdaptConfig small_config() {
  AdaptConfig c;
  c.iterations = 50;
  c.warmup_iterations = 0;
  c.batch_size = 16;
  c.top_n = 4;
  c.queue_capacity = 32;
  c.eval_interval = 25;
  c.hidden = 8;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("memory loop matches the straight-line reference, all flows") {
  const auto start = std::chrono::steady_clock::now();
  const auto inst = small_instance(11);
  const auto r = reference::compare(inst.target, inst.preds, small_config());
  CHECK(r.iterations == 50);
  CHECK(r.structural_mismatches == 0);
  CHECK_MESSAGE(r.max_abs_diff <= 1e-10, r.first_mismatch);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
}

TEST_CASE("reference agreement holds for every ablation row and with warm-up") {
  const auto inst = small_instance(12);
  for (const FlowConfig& flows : ablation_flow_rows()) {
    CAPTURE(flows.label());
    AdaptConfig c = small_config();
    c.flows = flows;
    c.warmup_iterations = 10;
    const auto r = reference::compare(inst.target, inst.preds, c);
    CHECK(r.structural_mismatches == 0);
    CHECK(r.max_abs_diff <= 1e-10);
  }
}

TEST_CASE("linear model and a queue that never fills") {
  const auto inst = small_instance(13);
  AdaptConfig c = small_config();
  c.hidden = 0;
  c.queue_capacity = 512;
  c.iterations = 20;
  const auto r = reference::compare(inst.target, inst.preds, c);
  CHECK(r.structural_mismatches == 0);
  CHECK(r.max_abs_diff <= 1e-10);
}
