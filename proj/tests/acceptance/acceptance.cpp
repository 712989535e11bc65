// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures (capped at 1).
//
//   acceptance --workdir DIR

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "CLI11.hpp"

#include "bimem/adapt.hpp"
#include "bimem/blackbox.hpp"
#include "bimem/config.hpp"
#include "bimem/data.hpp"
#include "bimem/eval.hpp"
#include "reference_bimem.hpp"
#include "support/gradcheck.hpp"

namespace fs = std::filesystem;
using namespace bimem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kSeeds = 5;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << detail << std::endl;
}

// Runs body, turning exceptions into a FAIL line.
void criterion(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [ok, detail] = body();
    report(id, name, ok, detail);
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::stringstream ss;
  ss << std::ifstream(p, std::ios::binary).rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Default benchmark for one seed, passed through the same files the CLI uses.
struct SeedData {
  PipelineConfig cfg;
  LabeledDataset target;
  PredictionSet preds;
};

SeedData prepare_seed(std::uint64_t seed, const fs::path& dir) {
  SeedData d;
  d.cfg = default_config();
  d.cfg.seed = seed;
  d.cfg.propagate_seed();
  fs::create_directories(dir);
  const auto pair = gen_shifted_gaussians(d.cfg.data);
  write_dataset(pair.source, dir / "source.csv");
  write_dataset(pair.target, dir / "target.csv");
  const auto source = read_dataset(dir / "source.csv", d.cfg.data.categories);
  d.target = read_dataset(dir / "target.csv", d.cfg.data.categories);
  const auto model = train_source(source, d.cfg.data.categories, d.cfg.source);
  export_predictions(model, d.target.strip_labels(), dir / "preds.csv", d.cfg.hard_only);
  d.preds = read_predictions(dir / "preds.csv");
  return d;
}

struct Phenomenon {
  double bb = 0.0;
  double bimem_final = 0.0, bimem_drop = 0.0;
  double vanilla_final = 0.0, vanilla_drop = 0.0;
  double pl_denoised = 0.0, pl_blackbox = 0.0;
  double seconds = 0.0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string workdir = (fs::temp_directory_path() / "bimem_acceptance").string();
  app.add_option("--workdir", workdir, "Scratch directory");
  CLI11_PARSE(app, argc, argv);
  const fs::path work(workdir);
  fs::remove_all(work);
  fs::create_directories(work);

  criterion(1, "property suites", [] {
    const auto t = Clock::now();
    std::vector<std::string> failed;
    const auto suites = split(BIMEM_PROPERTY_SUITES, ',');
    for (const auto& s : suites) {
      if (shell(s + " --minimal >/dev/null 2>&1") != 0) failed.push_back(fs::path(s).filename().string());
    }
    const double secs = seconds_since(t);
    std::string detail = std::to_string(suites.size() - failed.size()) + "/" + std::to_string(suites.size()) +
                         " suites green in " + fmt(secs, 1) + " s";
    for (const auto& f : failed) detail += "; failed " + f;
    return std::pair{failed.empty() && secs < 30.0, detail};
  });

  criterion(2, "reference equivalence", [] {
    const auto t = Clock::now();
    ShiftedGaussianSpec s;
    s.categories = 3;
    s.dim = 2;
    s.n_per_class = 100;
    s.seed = 2;
    const auto pair = gen_shifted_gaussians(s);
    SourceTraining st;
    st.hidden = 8;
    st.epochs = 5;
    const auto preds = predict_targets(train_source(pair.source, 3, st), pair.target.strip_labels());
    AdaptConfig c;
    c.iterations = 50;
    c.warmup_iterations = 0;
    c.batch_size = 16;
    c.top_n = 4;
    c.queue_capacity = 32;
    c.eval_interval = 50;
    c.hidden = 8;
    const auto r = reference::compare(pair.target, preds, c);
    const double secs = seconds_since(t);
    std::ostringstream d;
    d << r.iterations << " iterations, max |diff| " << std::scientific << std::setprecision(2) << r.max_abs_diff
      << ", " << r.structural_mismatches << " structural mismatches" << (r.first_mismatch.empty() ? "" : " (first: ")
      << r.first_mismatch << (r.first_mismatch.empty() ? "" : ")") << ", " << std::fixed << std::setprecision(2)
      << secs << " s";
    return std::pair{r.iterations == 50 && r.max_abs_diff <= 1e-10 && r.structural_mismatches == 0 && secs < 10.0,
                     d.str()};
  });

  criterion(3, "gradient check", [] {
    const auto t = Clock::now();
    const auto g = gradcheck::run(200, 77);
    const double secs = seconds_since(t);
    std::ostringstream d;
    d << g.instances << " instances, max relative error " << std::scientific << std::setprecision(2)
      << g.max_rel_error << ", " << std::fixed << secs << " s";
    return std::pair{g.instances >= 100 && g.max_rel_error < 1e-5 && secs < 10.0, d.str()};
  });

  // Criteria 4 and 6 share the per-seed runs.
  Phenomenon ph;
  std::vector<SeedData> data;
  bool ph_ok = true;
  std::string ph_error;
  try {
    const auto t = Clock::now();
    for (int seed = 0; seed < kSeeds; ++seed) {
      data.push_back(prepare_seed(static_cast<std::uint64_t>(seed), work / ("seed" + std::to_string(seed))));
      const SeedData& d = data.back();
      AdaptConfig bc = d.cfg.adapt;
      bc.method = Method::bimem;
      const auto b = run_adaptation(d.target, d.preds, bc).trace;
      AdaptConfig vc = d.cfg.adapt;
      vc.method = Method::vanilla_st;
      const auto v = run_adaptation(d.target, d.preds, vc).trace;
      ph.bb += b.points.back().pl_acc_blackbox / kSeeds;
      ph.bimem_final += b.points.back().acc_all / kSeeds;
      ph.bimem_drop += peak_final_drop(b, "acc_init_incorrect").value_or(0.0) / kSeeds;
      ph.vanilla_final += v.points.back().acc_all / kSeeds;
      ph.vanilla_drop += peak_final_drop(v, "acc_init_incorrect").value_or(0.0) / kSeeds;
      ph.pl_denoised += b.points.back().pl_acc_denoised.value_or(0.0) / kSeeds;
      ph.pl_blackbox += b.points.back().pl_acc_blackbox / kSeeds;
    }
    ph.seconds = seconds_since(t);
  } catch (const std::exception& e) {
    ph_ok = false;
    ph_error = e.what();
  }

  criterion(4, "forgetting on the initially incorrect subset", [&] {
    if (!ph_ok) return std::pair{false, "exception: " + ph_error};
    const bool ok = ph.vanilla_drop >= 0.05 && ph.bimem_drop <= 0.02 && ph.bimem_final >= ph.bb + 0.03 &&
                    ph.bimem_final >= ph.vanilla_final + 0.03 && ph.seconds < 180.0;
    return std::pair{ok, "vanilla drop " + fmt(ph.vanilla_drop) + ", bimem drop " + fmt(ph.bimem_drop) +
                             ", final bimem " + fmt(ph.bimem_final) + " vs black-box " + fmt(ph.bb) + " vs vanilla " +
                             fmt(ph.vanilla_final) + ", " + fmt(ph.seconds, 1) + " s"};
  });

  criterion(5, "ablation ordering", [&] {
    if (!ph_ok) return std::pair{false, "exception: " + ph_error};
    const auto t = Clock::now();
    std::vector<double> mean(ablation_flow_rows().size(), 0.0);
    for (const SeedData& d : data) {
      const std::uint64_t seed = d.cfg.seed;
      const auto rows = run_ablation_suite(d.target, d.preds, d.cfg.adapt, std::span<const std::uint64_t>(&seed, 1));
      for (std::size_t r = 0; r < rows.size(); ++r) mean[r] += rows[r].mean / static_cast<double>(data.size());
    }
    const double secs = seconds_since(t);
    bool ok = mean[6] >= mean[0] + 0.03 && secs < 600.0;
    std::string detail = "row means";
    for (std::size_t r = 0; r < mean.size(); ++r) {
      if (r >= 1 && r <= 5 && mean[6] < mean[r] - 0.005) ok = false;
      detail += " " + fmt(mean[r]);
    }
    return std::pair{ok, detail + ", " + fmt(secs, 1) + " s"};
  });

  criterion(6, "denoised pseudo labels", [&] {
    if (!ph_ok) return std::pair{false, "exception: " + ph_error};
    return std::pair{ph.pl_denoised >= ph.pl_blackbox,
                     "final denoised " + fmt(ph.pl_denoised) + " vs black-box " + fmt(ph.pl_blackbox)};
  });

  criterion(7, "determinism and the black-box boundary", [&] {
    const fs::path dir = work / "cli";
    fs::create_directories(dir);
    std::ofstream(dir / "cfg.json") << R"({"seed": 4, "iterations": 400, "warmup_iterations": 100})";
    const std::string cli = BIMEM_CLI_PATH;
    const std::string q = " >/dev/null 2>&1";
    const auto p = [&](const char* name) { return (dir / name).string(); };
    if (shell(cli + " gen-data --config " + p("cfg.json") + " --out-dir " + p("data") + q) != 0 ||
        shell(cli + " train-source --source " + p("data/source.csv") + " --config " + p("cfg.json") + " --out " +
              p("model.json") + q) != 0 ||
        shell(cli + " predict --model " + p("model.json") + " --target " + p("data/target.csv") + " --out " +
              p("preds.csv") + q) != 0) {
      return std::pair{false, std::string("pipeline setup failed")};
    }
    fs::remove(dir / "data/source.csv");
    fs::remove(dir / "model.json");
    const std::string adapt =
        cli + " adapt --target " + p("data/target.csv") + " --preds " + p("preds.csv") + " --config " + p("cfg.json");
    const int a = shell(adapt + " --out " + p("t1.csv") + q);
    const int b = shell(adapt + " --out " + p("t2.csv") + q);
    const bool same = a == 0 && b == 0 && slurp(dir / "t1.csv") == slurp(dir / "t2.csv") &&
                      !slurp(dir / "t1.csv").empty();
    return std::pair{same, std::string("adapt exit codes ") + std::to_string(a) + "," + std::to_string(b) +
                               " without source data or checkpoint; traces " +
                               (same ? "byte-identical" : "differ")};
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
