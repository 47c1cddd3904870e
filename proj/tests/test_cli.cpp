#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "cli.hpp"
#include "diswot/data.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "diswot");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = diswot::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("diswot_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("score all S0 candidates") {
  TempDir dir;
  const auto r = run({"score", "--space", "s0", "--all-s0", "--proxy", "diswot", "--teacher", "18,18,18-template",
                      "--seed", "1", "--batch-size", "4", "--out", dir / "a.csv"});
  REQUIRE(r.code == 0);
  const std::string csv = slurp(dir / "a.csv");
  CHECK(count_lines(csv) == 65);
  CHECK(csv.find("1-1-1,diswot,") != std::string::npos);
  const auto cfg = nlohmann::json::parse(slurp(dir / "a.csv.json"));
  CHECK(cfg["config"]["teacher"] == "18,18,18-template");
  CHECK(cfg["config"]["teacher_arch_id"] == "18-18-18");
  CHECK(cfg["config"]["seeds"][0] == 1);
  CHECK(cfg["rows"] == 64);
}

TEST_CASE("score output to stdout, several proxies and seeds") {
  const auto r = run({"score", "--arch", "7,1,3", "--arch", "3-3-3", "--proxy", "params,flops", "--seed", "1,2"});
  REQUIRE(r.code == 0);
  CHECK(count_lines(r.out) == 1 + 2 * 2 * 2);
  CHECK(r.out.find("7-1-3,params,259892,true,1\n") != std::string::npos);
  CHECK(r.out.find("3-3-3,params,278324,true,2\n") != std::string::npos);
}

TEST_CASE("score reads DISWOT_SEED") {
  ::setenv("DISWOT_SEED", "77", 1);
  const auto r = run({"score", "--arch", "1,1,1", "--proxy", "params"});
  ::unsetenv("DISWOT_SEED");
  REQUIRE(r.code == 0);
  CHECK(r.out.find(",true,77\n") != std::string::npos);
  ::setenv("DISWOT_SEED", "x", 1);
  CHECK(run({"score", "--arch", "1,1,1", "--proxy", "params"}).code == 2);
  ::unsetenv("DISWOT_SEED");
}

TEST_CASE("score other spaces and options") {
  auto r = run({"score", "--space", "nb201", "--proxy", "diswot,nwot,kd_kl,at", "--batch-size", "4", "--arch",
                "|nor_conv_3x3~0|+|nor_conv_1x1~0|avg_pool_3x3~1|+|skip_connect~0|none~1|nor_conv_3x3~2|",
                "--gradcam-source", "grad", "--normalization", "matrix", "--init", "gaussian"});
  REQUIRE(r.code == 0);
  CHECK(count_lines(r.out) == 5);
  TempDir dir;
  {
    std::ofstream f(dir / "archs.txt");
    f << "# S2 candidates\nc32_basic-k3-c32-d1-s1_basic-k5-c64-d1-s2_basic-k3-c64-d1-s1_bottleneck-k3-c128-d1-s2_basic-k3-c128-d1-s2_basic-k7-c256-d1-s1\n\n";
  }
  r = run({"score", "--space", "s2_cifar", "--arch-file", dir / "archs.txt", "--proxy", "diswot,params",
           "--batch-size", "2"});
  CHECK(r.code == 0);
  CHECK(count_lines(r.out) == 3);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({"score", "--all-s0", "--proxy", "nonsense"}).code == 2);
  CHECK(run({"score", "--proxy", "params"}).code == 2);
  CHECK(run({"score", "--space", "nb201", "--all-s0", "--proxy", "params"}).code == 2);
  CHECK(run({"score", "--arch", "1,2", "--proxy", "params"}).code == 2);
  CHECK(run({"score", "--arch", "1,1,1", "--unknown-flag"}).code == 2);
  CHECK(run({"score", "--arch", "1,1,1", "--data", "x.bin", "--synthetic"}).code == 2);
  CHECK(run({"search", "--strategy", "random", "--fitness", "params", "--budget", "0"}).code == 2);
  CHECK(run({"search", "--topk", "50"}).code == 2);
  CHECK(run({"search", "--strategy", "hill"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("data errors exit 1") {
  const auto r = run({"score", "--arch", "1,1,1", "--data", "/nonexistent/cifar.bin"});
  CHECK(r.code == 1);
  CHECK(r.err.find("/nonexistent/cifar.bin") != std::string::npos);
  CHECK(run({"rank", "--scores", "/nonexistent.csv", "--accuracy", "/nonexistent2.csv"}).code == 1);
}

TEST_CASE("evolutionary search finds the smallest network") {
  TempDir dir;
  const auto r = run({"search", "--space", "s0", "--fitness", "params", "--minimize", "--population", "16",
                      "--iters", "300", "--seed", "3", "--out", dir / "run.jsonl"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("best 1-1-1") != std::string::npos);
  const std::string jsonl = slurp(dir / "run.jsonl");
  CHECK(count_lines(jsonl) == 300);
  const auto first = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
  CHECK(first.contains("iter"));
  CHECK(first.contains("best_score"));
  CHECK(first.contains("best_arch"));
  CHECK(first.contains("evals"));
  const auto summary = nlohmann::json::parse(slurp(dir / "run.jsonl.summary.json"));
  CHECK(summary["config"]["population"] == 16);
  CHECK(summary["config"]["iters"] == 300);
  CHECK(summary["config"]["fitness"] == "params");
  CHECK(summary["config"]["minimize"] == true);
  CHECK(summary["config"]["seeds"][0] == 3);
  CHECK(summary["config"]["topk"] == 3);
  CHECK(summary["config"]["sample_ratio"] == 0.5);
  CHECK(summary["best"]["arch_id"] == "1-1-1");
  CHECK(summary["best"]["params"] == 83892);

  const auto again = run({"search", "--space", "s0", "--fitness", "params", "--minimize", "--population", "16",
                          "--iters", "300", "--seed", "3", "--out", dir / "run2.jsonl"});
  CHECK(slurp(dir / "run2.jsonl") == jsonl);
}

TEST_CASE("random search and constraints") {
  const auto r = run({"search", "--strategy", "random", "--fitness", "params", "--budget", "40",
                      "--max-params", "300000", "--seed", "2", "--reject-repeats"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("evals=40") != std::string::npos);
  const auto tight = run({"search", "--fitness", "params", "--max-params", "10", "--iters", "5"});
  CHECK(tight.code == 1);
}

TEST_CASE("rank reports correlations") {
  TempDir dir;
  diswot::AccuracyTable acc;
  std::vector<diswot::ScoreRow> rows;
  for (int i = 0; i < 60; ++i) {
    const std::string id = "n" + std::to_string(i);
    acc.emplace_back(id, 50.0 + i * 0.5);
    for (std::uint64_t seed = 1; seed <= 2; ++seed) rows.push_back({id, "perfect", i * 2.0, true, seed});
    rows.push_back({id, "inverse", i * 1.0, false, 1});
  }
  diswot::write_accuracy_csv(dir / "acc.csv", acc);
  diswot::write_scores_csv(dir / "scores.csv", rows);

  auto r = run({"rank", "--scores", dir / "scores.csv", "--accuracy", dir / "acc.csv", "--proxy", "perfect",
                "--out", dir / "report.csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("100.00±0.00") != std::string::npos);
  CHECK(slurp(dir / "report.csv") ==
        "proxy,metric,mean,std,n_seeds,n_archs\n"
        "perfect,kendall_tau,100.00,0.00,1,60\n"
        "perfect,spearman,100.00,0.00,1,60\n"
        "perfect,pearson,100.00,0.00,1,60\n");

  r = run({"rank", "--scores", dir / "scores.csv", "--accuracy", dir / "acc.csv", "--sample", "50", "--seeds",
           "10", "--seed", "4", "--out", dir / "report2.csv"});
  REQUIRE(r.code == 0);
  const std::string rep = slurp(dir / "report2.csv");
  CHECK(rep.find("perfect,spearman,100.00,0.00,10,50\n") != std::string::npos);
  CHECK(rep.find("inverse,kendall_tau,-100.00,0.00,10,50\n") != std::string::npos);

  diswot::AccuracyTable partial(acc.begin(), acc.begin() + 59);
  diswot::write_accuracy_csv(dir / "partial.csv", partial);
  r = run({"rank", "--scores", dir / "scores.csv", "--accuracy", dir / "partial.csv"});
  CHECK(r.code == 2);
  CHECK(r.err.find("n59") != std::string::npos);
}
