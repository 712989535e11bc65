#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "bimem/eval.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "bimem_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    std::ofstream(d / "cfg.json") << R"({"n_per_class": 30, "source_epochs": 3, "iterations": 60,
      "warmup_iterations": 10, "batch_size": 32, "queue_capacity": 64, "eval_interval": 20})";
    return d;
  }();
  return dir;
}

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run(const std::string& args) {
  const fs::path o = workdir() / "stdout.txt", e = workdir() / "stderr.txt";
  const std::string cmd = std::string(BIMEM_CLI_PATH) + " " + args + " >" + o.string() + " 2>" + e.string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::stringstream so, se;
  so << std::ifstream(o).rdbuf();
  se << std::ifstream(e).rdbuf();
  r.out = so.str();
  r.err = se.str();
  return r;
}

std::string first_line(const fs::path& p) {
  std::ifstream f(p);
  std::string s;
  std::getline(f, s);
  return s;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream f(p);
  std::size_t n = 0;
  for (std::string s; std::getline(f, s);) ++n;
  return n;
}

std::string slurp(const fs::path& p) {
  std::stringstream ss;
  ss << std::ifstream(p).rdbuf();
  return ss.str();
}

std::string w(const std::string& name) { return (workdir() / name).string(); }

// gen-data, train-source and predict, once.
void pipeline() {
  static const bool done = [] {
    REQUIRE(run("gen-data --config " + w("cfg.json") + " --out-dir " + w("data")).code == 0);
    REQUIRE(run("train-source --source " + w("data/source.csv") + " --config " + w("cfg.json") + " --out " +
                w("model.json"))
                .code == 0);
    REQUIRE(run("predict --model " + w("model.json") + " --target " + w("data/target.csv") + " --out " +
                w("preds.csv"))
                .code == 0);
    return true;
  }();
  (void)done;
}

}  // namespace

TEST_CASE("gen-data writes both domains and creates the directory") {
  const auto r = run("gen-data --config " + w("cfg.json") + " --out-dir " + w("fresh/nested"));
  CHECK(r.code == 0);
  CHECK(r.out.find("\"n_per_class\": 30") != std::string::npos);
  CHECK(r.out.find("\"gamma_prime\"") != std::string::npos);
  CHECK(line_count(workdir() / "fresh/nested/source.csv") == 151);
  CHECK(line_count(workdir() / "fresh/nested/target.csv") == 151);
  CHECK(first_line(workdir() / "fresh/nested/target.csv") == "id,f0,f1,f2,f3,f4,f5,f6,f7,label");
}

TEST_CASE("bad config key exits 1 and names the key") {
  std::ofstream(workdir() / "bad.json") << R"({"n_per_clas": 3})";
  const auto r = run("gen-data --config " + w("bad.json") + " --out-dir " + w("x"));
  CHECK(r.code == 1);
  CHECK(r.err.find("n_per_clas") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("adapt --target x.csv").code == 1);
}

TEST_CASE("train-source and predict are reproducible") {
  pipeline();
  CHECK(run("train-source --source " + w("data/source.csv") + " --config " + w("cfg.json") + " --out " +
            w("model2.json"))
            .code == 0);
  CHECK(slurp(workdir() / "model.json") == slurp(workdir() / "model2.json"));
  CHECK(first_line(workdir() / "preds.csv") == "id,yhat,p0,p1,p2,p3,p4");
  CHECK(line_count(workdir() / "preds.csv") == 151);
  CHECK(run("predict --model " + w("model.json") + " --target " + w("data/target.csv") + " --out " +
            w("hard.csv") + " --hard-only")
            .code == 0);
  const std::string row = [&] {
    std::ifstream f(workdir() / "hard.csv");
    std::string s;
    std::getline(f, s);
    std::getline(f, s);
    return s;
  }();
  CHECK(row.find("0.02") != std::string::npos);
}

TEST_CASE("adapt writes a trace with the contract header, deterministically") {
  pipeline();
  const std::string base =
      "adapt --target " + w("data/target.csv") + " --preds " + w("preds.csv") + " --config " + w("cfg.json");
  CHECK(run(base + " --out " + w("t1.csv")).code == 0);
  CHECK(run(base + " --out " + w("t2.csv")).code == 0);
  CHECK(first_line(workdir() / "t1.csv") == std::string(bimem::kTraceHeader));
  CHECK(line_count(workdir() / "t1.csv") == 5);
  CHECK(slurp(workdir() / "t1.csv") == slurp(workdir() / "t2.csv"));
  CHECK(fs::exists(workdir() / "t1.csv.meta.json"));

  CHECK(run(base + " --method vanilla_st --out " + w("v.csv")).code == 0);
  CHECK(run(base + " --method nope --out " + w("n.csv")).code == 1);
  CHECK(run("adapt --target " + w("missing.csv") + " --preds " + w("preds.csv") + " --out " + w("m.csv")).code == 2);
}

TEST_CASE("ablate emits seven labelled rows") {
  pipeline();
  const auto r = run("ablate --target " + w("data/target.csv") + " --preds " + w("preds.csv") + " --config " +
                     w("cfg.json") + " --seeds 0,1 --out " + w("abl.csv"));
  CHECK(r.code == 0);
  CHECK(line_count(workdir() / "abl.csv") == 8);
  const std::string table = slurp(workdir() / "abl.csv");
  CHECK(table.find("\n1,none,0,0,0,0,0,0,") != std::string::npos);
  CHECK(table.find("\n7,SM->ST+SM->LT+ST->LT+SM<-ST+SM<-LT+ST<-LT,1,1,1,1,1,1,") != std::string::npos);
  CHECK(run("ablate --target " + w("data/target.csv") + " --preds " + w("preds.csv") + " --seeds 0,x --out " +
            w("abl2.csv"))
            .code == 1);
}

TEST_CASE("report summarizes traces and guards the partition identity") {
  pipeline();
  const std::string base =
      "adapt --target " + w("data/target.csv") + " --preds " + w("preds.csv") + " --config " + w("cfg.json");
  REQUIRE(run(base + " --out " + w("r1.csv")).code == 0);
  CHECK(run("report " + w("r1.csv") + " --out " + w("summary.csv")).code == 0);
  CHECK(first_line(workdir() / "summary.csv") == "method,seed,final_acc,peak_acc,drop_incorrect_subset");
  CHECK(line_count(workdir() / "summary.csv") == 2);

  CHECK(run("report --out " + w("empty.csv")).code == 1);

  // Corrupt one acc_all value.
  std::string text = slurp(workdir() / "r1.csv");
  const auto pos = text.find('\n') + 1;
  const auto comma = text.find(',', pos);
  text.replace(comma + 1, text.find(',', comma + 1) - comma - 1, "0.999");
  std::ofstream(workdir() / "r1.csv") << text;
  CHECK(run("report " + w("r1.csv") + " --out " + w("summary2.csv")).code == 2);
}
