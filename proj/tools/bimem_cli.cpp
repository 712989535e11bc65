// bimem: synthetic black-box domain adaptation pipeline.
//
//   bimem gen-data     --config cfg.json --out-dir data/
//   bimem train-source --source data/source.csv --config cfg.json --out source_model.json
//   bimem predict      --model source_model.json --target data/target.csv --out preds.csv [--hard-only]
//   bimem adapt        --target data/target.csv --preds preds.csv --config cfg.json [--method m] --out trace.csv
//   bimem ablate       --target data/target.csv --preds preds.csv --config cfg.json --seeds 0,1,2 --out table.csv
//   bimem report       trace1.csv [trace2.csv ...] --out summary.csv
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data or runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bimem/adapt.hpp"
#include "bimem/blackbox.hpp"
#include "bimem/checkpoint.hpp"
#include "bimem/config.hpp"
#include "bimem/csv.hpp"
#include "bimem/data.hpp"
#include "bimem/eval.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Errors raised while resolving arguments and configuration.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bimem::PipelineConfig resolve_config(const std::string& path) {
  try {
    return path.empty() ? bimem::default_config() : bimem::load_config(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

void print_config(const std::string& command, const bimem::PipelineConfig& cfg) {
  std::cout << "# " << command << " resolved config\n" << bimem::to_json(cfg).dump(2) << std::endl;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      seeds.push_back(v);
    } catch (const std::exception&) {
      throw UsageError("--seeds expects a comma-separated list of nonnegative integers, got '" + text + "'");
    }
  }
  if (seeds.empty()) throw UsageError("--seeds is empty");
  return seeds;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
  const auto cfg = resolve_config(config_path);
  print_config("gen-data", cfg);
  const auto pair = bimem::gen_shifted_gaussians(cfg.data);
  fs::create_directories(out_dir);
  bimem::write_dataset(pair.source, fs::path(out_dir) / "source.csv");
  bimem::write_dataset(pair.target, fs::path(out_dir) / "target.csv");
  std::cout << "wrote " << pair.source.size() << " source and " << pair.target.size() << " target rows to "
            << out_dir << "\n";
  return 0;
}

int cmd_train_source(const std::string& source_path, const std::string& config_path, const std::string& out) {
  const auto cfg = resolve_config(config_path);
  print_config("train-source", cfg);
  const auto source = bimem::read_dataset(source_path, cfg.data.categories);
  const auto model = bimem::train_source(source, cfg.data.categories, cfg.source);
  ensure_parent(out);
  bimem::save_params(model, out);
  std::cout << "saved source model to " << out << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& target_path, const std::string& config_path,
                const std::string& out, bool hard_only_flag) {
  auto cfg = resolve_config(config_path);
  if (hard_only_flag) cfg.hard_only = true;
  print_config("predict", cfg);
  const auto model = bimem::load_params(model_path);
  const auto target = bimem::read_dataset(target_path);
  ensure_parent(out);
  const auto preds = bimem::export_predictions(model, target.strip_labels(), out, cfg.hard_only);
  std::cout << "wrote " << preds.size() << " predictions to " << out << "\n";
  return 0;
}

int cmd_adapt(const std::string& target_path, const std::string& preds_path, const std::string& config_path,
              const std::string& method, std::optional<std::uint64_t> seed, const std::string& out,
              const std::string& model_out) {
  auto cfg = resolve_config(config_path);
  try {
    if (!method.empty()) cfg.adapt.method = bimem::parse_method(method);
    if (seed) {
      cfg.seed = *seed;
      cfg.propagate_seed();
    }
    cfg.adapt.validate();
  } catch (const bimem::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  print_config("adapt", cfg);
  const auto preds = bimem::read_predictions(preds_path);
  const auto target = bimem::read_dataset(target_path, preds.categories);
  const auto result = bimem::run_adaptation(target, preds, cfg.adapt);

  const auto aligned = bimem::align_predictions(preds, target.ids);
  const auto split = bimem::split_by_initial_correctness(target, aligned);
  ensure_parent(out);
  bimem::write_trace(result.trace, out);
  bimem::write_trace_meta({std::string(bimem::method_name(cfg.adapt.method)), cfg.seed, split.correct.size(),
                           split.incorrect.size()},
                          out);
  if (!model_out.empty()) bimem::save_params(result.model, model_out);
  const auto& last = result.trace.points.back();
  std::cout << "final acc_all " << last.acc_all << " (black-box " << last.pl_acc_blackbox << "); trace at " << out
            << "\n";
  return 0;
}

int cmd_ablate(const std::string& target_path, const std::string& preds_path, const std::string& config_path,
               const std::string& seeds_text, const std::string& out) {
  auto cfg = resolve_config(config_path);
  const auto seeds = seeds_text.empty() ? std::vector<std::uint64_t>{cfg.seed} : parse_seeds(seeds_text);
  cfg.adapt.method = bimem::Method::bimem;
  try {
    cfg.adapt.validate();
  } catch (const bimem::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  print_config("ablate", cfg);
  const auto preds = bimem::read_predictions(preds_path);
  const auto target = bimem::read_dataset(target_path, preds.categories);
  const auto rows = bimem::run_ablation_suite(target, preds, cfg.adapt, seeds);

  ensure_parent(out);
  std::ofstream f(out);
  if (!f) throw bimem::FileError("cannot write " + out);
  f << "row,flows,sm_to_st,sm_to_lt,st_to_lt,sm_from_st,sm_from_lt,st_from_lt,mean_final_acc,std_final_acc,seeds\n";
  for (const auto& r : rows) {
    const auto& fl = r.flows;
    f << r.row << ',' << fl.label() << ',' << fl.sm_to_st << ',' << fl.sm_to_lt << ',' << fl.st_to_lt << ','
      << fl.sm_from_st << ',' << fl.sm_from_lt << ',' << fl.st_from_lt << ',' << bimem::csv::format_real(r.mean)
      << ',' << bimem::csv::format_real(r.stddev) << ',' << seeds.size() << '\n';
    std::cout << "row " << r.row << " " << fl.label() << ": " << r.mean << " +- " << r.stddev << "\n";
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& traces, const std::string& out) {
  if (traces.empty()) throw UsageError("report needs at least one trace file");
  std::vector<bimem::SummaryRow> rows;
  for (const auto& path : traces) {
    const auto trace = bimem::read_trace(path);
    const auto meta = bimem::read_trace_meta(path);
    bimem::check_partition_identity(trace, meta);
    rows.push_back(bimem::summarize(trace, meta));
  }
  ensure_parent(out);
  bimem::write_summary(rows, out);
  std::cout << "summarized " << rows.size() << " traces into " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bi-directional memory self-training for black-box domain adaptation"};
  app.require_subcommand(1);

  std::string config, out_dir, source, out, model, target, preds, method, seeds_text, model_out;
  bool hard_only = false;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> traces;

  auto* gen = app.add_subcommand("gen-data", "Generate source.csv and target.csv");
  gen->add_option("--config", config, "JSON config");
  gen->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* train = app.add_subcommand("train-source", "Train the source model on labelled source data");
  train->add_option("--source", source, "source.csv")->required();
  train->add_option("--config", config, "JSON config");
  train->add_option("--out", out, "Model checkpoint")->required();

  auto* predict = app.add_subcommand("predict", "Export black-box predictions for the target domain");
  predict->add_option("--model", model, "Source model checkpoint")->required();
  predict->add_option("--target", target, "target.csv")->required();
  predict->add_option("--config", config, "JSON config");
  predict->add_option("--out", out, "Predictions CSV")->required();
  predict->add_flag("--hard-only", hard_only, "Export smoothed one-hot predictions only");

  auto* adapt = app.add_subcommand("adapt", "Self-train a target model from black-box predictions");
  adapt->add_option("--target", target, "target.csv")->required();
  adapt->add_option("--preds", preds, "Predictions CSV")->required();
  adapt->add_option("--config", config, "JSON config");
  adapt->add_option("--method", method, "bimem | vanilla_st | confidence_st (overrides config)");
  adapt->add_option("--seed", seed, "Overrides the config seed");
  adapt->add_option("--out", out, "Trace CSV")->required();
  adapt->add_option("--model-out", model_out, "Adapted model checkpoint");

  auto* ablate = app.add_subcommand("ablate", "Run the seven memory-flow ablation rows");
  ablate->add_option("--target", target, "target.csv")->required();
  ablate->add_option("--preds", preds, "Predictions CSV")->required();
  ablate->add_option("--config", config, "JSON config");
  ablate->add_option("--seeds", seeds_text, "Comma-separated seeds (default: config seed)");
  ablate->add_option("--out", out, "Ablation table CSV")->required();

  auto* report = app.add_subcommand("report", "Summarize trace CSVs");
  report->add_option("traces", traces, "Trace CSV files");
  report->add_option("--out", out, "Summary CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_data(config, out_dir);
    if (*train) return cmd_train_source(source, config, out);
    if (*predict) return cmd_predict(model, target, config, out, hard_only);
    if (*adapt) return cmd_adapt(target, preds, config, method, seed, out, model_out);
    if (*ablate) return cmd_ablate(target, preds, config, seeds_text, out);
    if (*report) return cmd_report(traces, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
