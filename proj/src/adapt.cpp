#include "bimem/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "bimem/errors.hpp"
#include "bimem/kernels.hpp"
#include "bimem/rng.hpp"

namespace bimem {

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::bimem: return "bimem";
    case Method::vanilla_st: return "vanilla_st";
    case Method::confidence_st: return "confidence_st";
  }
  return "bimem";
}

Method parse_method(std::string_view name) {
  if (name == "bimem") return Method::bimem;
  if (name == "vanilla_st") return Method::vanilla_st;
  if (name == "confidence_st") return Method::confidence_st;
  throw InvalidArgument("unknown method '" + std::string(name) + "' (expected bimem, vanilla_st or confidence_st)");
}

std::size_t AdaptConfig::resolved_top_n() const noexcept {
  return top_n != 0 ? top_n : std::max<std::size_t>(1, batch_size / 4);
}

void AdaptConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw InvalidArgument("adapt config: " + msg); };
  if (batch_size == 0) fail("batch_size must be positive");
  const std::size_t n = resolved_top_n();
  if (!(n <= batch_size && batch_size <= queue_capacity)) fail("need top_n <= batch_size <= queue_capacity");
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail("lr must be >= 0");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
  if (!(gamma_prime >= 0.0 && gamma_prime < 1.0)) fail("gamma_prime must lie in [0, 1)");
  if (!(confidence_quantile >= 0.0 && confidence_quantile <= 1.0)) fail("confidence_quantile must lie in [0, 1]");
  if (eval_interval == 0) fail("eval_interval must be positive");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) fail("init_scale must be >= 0");
}

EpochSampler::EpochSampler(std::size_t n, std::size_t batch_size, std::mt19937_64 rng)
    : batch_size_(batch_size), rng_(std::move(rng)), order_(n), cursor_(n) {
  if (n == 0 || batch_size == 0) throw InvalidArgument("EpochSampler: empty dataset or batch");
  std::iota(order_.begin(), order_.end(), 0);
}

std::vector<std::size_t> EpochSampler::next() {
  if (cursor_ >= order_.size()) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }
  const std::size_t stop = std::min(order_.size(), cursor_ + batch_size_);
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(stop));
  cursor_ = stop;
  return batch;
}

std::size_t EpochSampler::batches_per_epoch() const noexcept {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

Category denoise_label(std::span<const double> calibrated, std::span<const double> blackbox, Category blackbox_label) {
  if (calibrated.empty()) return blackbox_label;
  if (calibrated.size() != blackbox.size()) throw InvalidArgument("denoise_label: category count mismatch");
  std::vector<double> product(blackbox.size());
  for (std::size_t c = 0; c < product.size(); ++c) product[c] = calibrated[c] * blackbox[c];
  if (*std::max_element(product.begin(), product.end()) <= 0.0) return blackbox_label;
  return argmax_label(product);
}

std::vector<bool> select_confident(std::span<const Category> labels, std::span<const double> probs,
                                   std::size_t categories, double quantile) {
  if (probs.size() != labels.size() * categories) throw InvalidArgument("select_confident: shape mismatch");
  std::vector<std::vector<std::size_t>> by_class(categories);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class.at(labels[i]).push_back(i);
  std::vector<bool> mask(labels.size(), false);
  for (std::size_t c = 0; c < categories; ++c) {
    auto& rows = by_class[c];
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return probs[a * categories + c] > probs[b * categories + c];
    });
    // The epsilon keeps q * n_c from rounding up past an exact integer.
    const auto keep = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(rows.size()) - 1e-9));
    for (std::size_t j = 0; j < std::min(keep, rows.size()); ++j) mask[rows[j]] = true;
  }
  return mask;
}

namespace {

struct LoopSetup {
  FeatureTable table;
  PredictionSet blackbox;
  ClassifierParams student;
  MomentumModel momentum;
  EpochSampler sampler;
};

LoopSetup prepare(const LabeledDataset& target, const PredictionSet& preds, const AdaptConfig& cfg) {
  cfg.validate();
  if (target.size() == 0) throw InvalidArgument("adapt: empty target dataset");
  PredictionSet aligned = align_predictions(preds, target.ids);
  auto init_rng = make_rng(cfg.seed, Stream::target_init);
  ClassifierParams student = ClassifierParams::random_uniform(Layout{target.dim, cfg.hidden, preds.categories},
                                                              cfg.init_scale, init_rng);
  MomentumModel momentum{student, cfg.gamma};
  return LoopSetup{target.strip_labels(), std::move(aligned), std::move(student), std::move(momentum),
                   EpochSampler(target.size(), cfg.batch_size, make_rng(cfg.seed, Stream::target_batches))};
}

std::vector<double> gather_rows(const FeatureTable& table, std::span<const std::size_t> idx) {
  std::vector<double> rows;
  rows.reserve(idx.size() * table.dim);
  for (std::size_t i : idx) {
    const auto r = table.row(i);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

TracePoint trace_point(std::size_t iter, const ClassifierParams& student, const FeatureTable& table,
                       const Evaluator& ev, std::optional<double> pl_denoised) {
  const auto fwd = kernels::forward_rows(student, table.features, table.dim);
  const Evaluator::Metrics m = ev.evaluate(kernels::hard_labels(fwd));
  return TracePoint{iter, m.acc_all, m.acc_init_correct, m.acc_init_incorrect, pl_denoised, ev.blackbox_accuracy()};
}

bool is_eval_point(std::size_t it, const AdaptConfig& cfg) {
  return it % cfg.eval_interval == 0 || it == cfg.iterations;
}

// Denoised labels for every target sample under the current memories, read-only.
std::vector<Category> denoise_all(const FeatureTable& table, const PredictionSet& blackbox,
                                  const MomentumModel& momentum, const BiMemState& state, const FlowConfig& flows) {
  const auto fwd = kernels::forward_rows(momentum.params, table.features, table.dim);
  const SensoryCalibration cal =
      centroid_posteriors(fwd.features, fwd.feature_dim, state.long_term, short_term_centroids(state), flows);
  std::vector<Category> labels(table.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    labels[i] = denoise_label(cal.anchored[i] ? std::span<const double>(cal.probs[i]) : std::span<const double>(),
                              blackbox.prob(i), blackbox.hard[i]);
  }
  return labels;
}

RunResult bimem_loop(LoopSetup s, const AdaptConfig& cfg, const Evaluator& ev, const BiMemObserver& observer) {
  const std::size_t feature_dim = cfg.hidden == 0 ? s.table.dim : cfg.hidden;
  BiMemState state = make_bimem_state(s.blackbox.categories, feature_dim, cfg.resolved_top_n(), cfg.queue_capacity,
                                      cfg.gamma_prime);
  RunResult result;
  const auto record = [&](std::size_t it) {
    const std::optional<double> pl =
        it <= cfg.warmup_iterations
            ? ev.label_accuracy(s.blackbox.hard)
            : ev.label_accuracy(denoise_all(s.table, s.blackbox, s.momentum, state, cfg.flows));
    result.trace.points.push_back(trace_point(it, s.student, s.table, ev, pl));
  };
  record(0);

  // Warm-up fills the memories from raw momentum predictions; nothing is
  // calibrated until it ends.
  FlowConfig warmup_flows = cfg.flows;
  warmup_flows.sm_from_st = warmup_flows.sm_from_lt = warmup_flows.st_from_lt = false;

  std::vector<Example> examples;
  std::vector<Category> labels;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    momentum_update(s.momentum, s.student);
    const std::vector<std::size_t> idx = s.sampler.next();
    const std::vector<double> rows = gather_rows(s.table, idx);
    const auto enc = kernels::forward_rows(s.momentum.params, rows, s.table.dim, kernels::Exec::serial);

    std::vector<MemorySlot> batch(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto f = enc.feature(k);
      const auto p = enc.prob(k);
      batch[k] = MemorySlot{s.table.ids[idx[k]], FeatureVector(f.begin(), f.end()), ProbVector(p.begin(), p.end())};
    }
    const bool warming_up = it <= cfg.warmup_iterations;
    const SensoryCalibration cal = bimem_step(state, std::move(batch), warming_up ? warmup_flows : cfg.flows);

    labels.resize(idx.size());
    examples.clear();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t i = idx[k];
      labels[k] = warming_up || !cal.anchored[k]
                      ? s.blackbox.hard[i]
                      : denoise_label(cal.probs[k], s.blackbox.prob(i), s.blackbox.hard[i]);
      examples.push_back({s.table.row(i), labels[k]});
    }
    sgd_step(s.student, examples, cfg.lr);
    if (observer) observer(it, state, cal, labels);
    if (is_eval_point(it, cfg)) record(it);
  }
  result.model = std::move(s.student);
  return result;
}

// Shared loop of the memory-free baselines. Labels start at the black-box
// labels and are regenerated from the momentum model every refresh interval;
// with selective == true only the confident fraction carries a label.
RunResult self_training_loop(LoopSetup s, const AdaptConfig& cfg, const Evaluator& ev, bool selective) {
  const std::size_t categories = s.blackbox.categories;
  const std::size_t refresh = cfg.refresh_interval != 0 ? cfg.refresh_interval : s.sampler.batches_per_epoch();
  std::vector<Category> labels = s.blackbox.hard;
  std::vector<bool> mask = selective ? select_confident(labels, s.blackbox.probs, categories, cfg.confidence_quantile)
                                     : std::vector<bool>(labels.size(), true);

  RunResult result;
  const auto record = [&](std::size_t it) {
    result.trace.points.push_back(trace_point(it, s.student, s.table, ev, ev.label_accuracy(labels, mask)));
  };
  record(0);

  std::vector<Example> examples;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    momentum_update(s.momentum, s.student);
    if (it > 1 && (it - 1) % refresh == 0 && it > cfg.warmup_iterations) {
      const auto fwd = kernels::forward_rows(s.momentum.params, s.table.features, s.table.dim);
      labels = kernels::hard_labels(fwd);
      if (selective) mask = select_confident(labels, fwd.probs, categories, cfg.confidence_quantile);
    }
    examples.clear();
    for (std::size_t i : s.sampler.next()) {
      if (mask[i]) examples.push_back({s.table.row(i), labels[i]});
    }
    sgd_step(s.student, examples, cfg.lr);
    if (is_eval_point(it, cfg)) record(it);
  }
  result.model = std::move(s.student);
  return result;
}

void require_method(const AdaptConfig& cfg, Method expected) {
  if (cfg.method != expected) {
    throw InvalidArgument("config method is " + std::string(method_name(cfg.method)) + ", expected " +
                          std::string(method_name(expected)));
  }
}

}  // namespace

RunResult run_bimem(const LabeledDataset& target, const PredictionSet& preds, const AdaptConfig& cfg,
                    const BiMemObserver& observer) {
  require_method(cfg, Method::bimem);
  LoopSetup s = prepare(target, preds, cfg);
  const Evaluator ev(target, s.blackbox);
  return bimem_loop(std::move(s), cfg, ev, observer);
}

RunResult run_vanilla_st(const LabeledDataset& target, const PredictionSet& preds, const AdaptConfig& cfg) {
  require_method(cfg, Method::vanilla_st);
  LoopSetup s = prepare(target, preds, cfg);
  const Evaluator ev(target, s.blackbox);
  return self_training_loop(std::move(s), cfg, ev, false);
}

RunResult run_confidence_st(const LabeledDataset& target, const PredictionSet& preds, const AdaptConfig& cfg) {
  require_method(cfg, Method::confidence_st);
  LoopSetup s = prepare(target, preds, cfg);
  const Evaluator ev(target, s.blackbox);
  return self_training_loop(std::move(s), cfg, ev, true);
}

RunResult run_adaptation(const LabeledDataset& target, const PredictionSet& preds, const AdaptConfig& cfg) {
  switch (cfg.method) {
    case Method::bimem: return run_bimem(target, preds, cfg);
    case Method::vanilla_st: return run_vanilla_st(target, preds, cfg);
    case Method::confidence_st: return run_confidence_st(target, preds, cfg);
  }
  throw InvalidArgument("unknown method");
}

std::vector<FlowConfig> ablation_flow_rows() {
  // Columns: SM->ST, SM->LT, ST->LT, SM<-ST, SM<-LT, ST<-LT.
  return {
      {false, false, false, false, false, false},
      {true, false, false, true, false, false},
      {false, true, false, false, true, false},
      {true, true, false, true, true, false},
      {true, true, true, true, true, false},
      {true, true, false, true, true, true},
      {true, true, true, true, true, true},
  };
}

std::vector<AblationRow> run_ablation_suite(const LabeledDataset& target, const PredictionSet& preds,
                                            const AdaptConfig& base_cfg, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw InvalidArgument("run_ablation_suite: no seeds");
  AdaptConfig probe = base_cfg;
  probe.method = Method::bimem;
  probe.validate();

  const std::vector<FlowConfig> flows = ablation_flow_rows();
  const std::size_t n_seeds = seeds.size();
  const auto cells = static_cast<std::ptrdiff_t>(flows.size() * n_seeds);
  std::vector<double> finals(static_cast<std::size_t>(cells), 0.0);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t cell = 0; cell < cells; ++cell) {
    try {
      const auto u = static_cast<std::size_t>(cell);
      AdaptConfig cfg = probe;
      cfg.flows = flows[u / n_seeds];
      cfg.seed = seeds[u % n_seeds];
      finals[u] = run_bimem(target, preds, cfg).trace.points.back().acc_all;
    } catch (...) {
#pragma omp critical(bimem_ablation_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<AblationRow> rows;
  for (std::size_t r = 0; r < flows.size(); ++r) {
    AblationRow row;
    row.row = r + 1;
    row.flows = flows[r];
    row.final_acc.assign(finals.begin() + static_cast<std::ptrdiff_t>(r * n_seeds),
                         finals.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_seeds));
    row.mean = std::accumulate(row.final_acc.begin(), row.final_acc.end(), 0.0) / static_cast<double>(n_seeds);
    if (n_seeds > 1) {
      double ss = 0.0;
      for (double v : row.final_acc) ss += (v - row.mean) * (v - row.mean);
      row.stddev = std::sqrt(ss / static_cast<double>(n_seeds - 1));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace bimem
