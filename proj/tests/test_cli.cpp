#include "mbal/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace mbal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("mbal_cli_test_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int call(int (*cmd)(const std::vector<std::string>&, std::ostream&, std::ostream&),
         const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  return cmd(args, out, err);
}

std::vector<std::string> run_args(const std::string& scenario, const std::string& out, const std::string& algo) {
  return {"--scenario", scenario, "--algo", algo, "--seed", "3",     "--trials", "3",
          "--T",        "40",     "--test-size", "50", "--epochs", "5", "--out", out};
}

}  // namespace

TEST_CASE("gen, run, compare and psi end to end") {
  const TempDir dir;
  const std::string scn = dir / "scn.json";
  REQUIRE(call(cmd_gen, {"--problem", "shortest-path", "--seed", "42", "--out", scn}) == 0);
  const std::string scn_text = slurp(scn);
  CHECK(nlohmann::json::parse(scn_text).at("kind") == "shortest-path");

  REQUIRE(call(cmd_run, run_args(scn, dir / "sup.csv", "supervised")) == 0);
  REQUIRE(call(cmd_run, run_args(scn, dir / "mbal.csv", "mbal")) == 0);
  const std::string sup_csv = slurp(dir / "sup.csv");
  CHECK(sup_csv.rfind("# mbal-clo v1\n", 0) == 0);
  CHECK(sup_csv.find("algo=supervised") != std::string::npos);

  const auto summary = nlohmann::json::parse(slurp(dir / "sup.csv.summary.json"));
  CHECK(summary.at("format") == "mbal-clo-summary/1");
  CHECK(summary.at("completed") == 3);
  CHECK_FALSE(summary.contains("wall_clock_seconds"));
  for (const auto& t : summary.at("trials")) CHECK(t.at("labels") == 40 + 10);

  std::ostringstream out;
  std::ostringstream err;
  REQUIRE(cmd_compare({"--supervised", dir / "sup.csv", "--mbal", dir / "mbal.csv", "--budget", "0", "--budget",
                       "5", "--out", dir / "ratio.csv"},
                      out, err) == 0);
  const std::string ratio = slurp(dir / "ratio.csv");
  CHECK(ratio.find("problem,surrogate,label_budget,ratio,ci_lo,ci_hi,trials\n") != std::string::npos);
  CHECK(ratio.find("shortest-path,spo+,0,1,") != std::string::npos);
  CHECK(out.str().find("budget 5") != std::string::npos);

  REQUIRE(call(cmd_psi, {"--problem", "induced-ball", "--M", "2000", "--points", "5", "--out", dir / "psi.csv"}) ==
          0);
  const std::string psi = slurp(dir / "psi.csv");
  CHECK(psi.find("b,psi_hat\n") != std::string::npos);
  CHECK(psi.find("kappa_hat=") != std::string::npos);
}

TEST_CASE("outputs are byte-identical across reruns and job counts") {
  const TempDir dir;
  const std::string scn = dir / "scn.json";
  REQUIRE(call(cmd_gen, {"--problem", "shortest-path", "--seed", "7", "--out", scn}) == 0);
  REQUIRE(call(cmd_gen, {"--problem", "shortest-path", "--seed", "7", "--out", dir / "scn2.json"}) == 0);
  CHECK(slurp(scn) == slurp(dir / "scn2.json"));

  auto a = run_args(scn, dir / "a.csv", "mbal");
  auto b = run_args(scn, dir / "b.csv", "mbal");
  a.insert(a.end(), {"--jobs", "1"});
  b.insert(b.end(), {"--jobs", "3", "--summary", dir / "b.json"});
  REQUIRE(call(cmd_run, a) == 0);
  REQUIRE(call(cmd_run, b) == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  auto sa = nlohmann::json::parse(slurp(dir / "a.csv.summary.json"));
  auto sb = nlohmann::json::parse(slurp(dir / "b.json"));
  sa["config"].erase("jobs");
  sb["config"].erase("jobs");
  CHECK(sa == sb);

  REQUIRE(call(cmd_psi, {"--scenario", scn, "--M", "500", "--out", dir / "p1.csv"}) == 0);
  REQUIRE(call(cmd_psi, {"--scenario", scn, "--M", "500", "--out", dir / "p2.csv"}) == 0);
  CHECK(slurp(dir / "p1.csv") == slurp(dir / "p2.csv"));
}

TEST_CASE("exit codes") {
  const TempDir dir;
  CHECK(call(run_cli, {}) == 2);
  CHECK(call(run_cli, {"--help"}) == 0);
  CHECK(call(run_cli, {"fit"}) == 2);
  CHECK(call(cmd_gen, {"--out", dir / "x.json"}) == 2);
  CHECK(call(cmd_gen, {"--problem", "shortest-path", "--bogus", "--out", dir / "x.json"}) == 2);
  CHECK(call(cmd_run, {"--scenario", dir / "missing.json", "--out", dir / "r.csv"}) == 2);
  CHECK(call(cmd_run, {"--problem", "pricing", "--p-tilde", "2", "--out", dir / "r.csv"}) == 2);
  // a 5x5 grid cannot place six centers at the default margin
  CHECK(call(cmd_gen, {"--problem", "shortest-path", "--grid", "5", "--out", dir / "x.json"}) == 3);
  CHECK(call(cmd_gen, {"--problem", "pricing", "--out", (dir.path / "no" / "dir" / "x.json").string()}) == 4);

  const std::string scn = dir / "scn.json";
  REQUIRE(call(cmd_gen, {"--problem", "shortest-path", "--out", scn}) == 0);
  REQUIRE(call(cmd_run, run_args(scn, dir / "m1.csv", "mbal")) == 0);
  REQUIRE(call(cmd_run, run_args(scn, dir / "m2.csv", "mbal")) == 0);
  // two MBAL runs are not a supervised/MBAL pair
  CHECK(call(cmd_compare, {"--supervised", dir / "m1.csv", "--mbal", dir / "m2.csv", "--budget", "1", "--out",
                           dir / "r.csv"}) == 2);
}

TEST_CASE("run_experiment does not depend on the worker count") {
  const Scenario scn = gen_shortest_path_scenario(42, ShortestPathOptions{});
  ExperimentConfig cfg;
  cfg.T = 30;
  cfg.trials = 4;
  cfg.test_size = 30;
  cfg.mbal.trainer.epochs_per_update = 3;
  cfg.jobs = 1;
  const ExperimentResult one = run_experiment(cfg, scn);
  cfg.jobs = 4;
  const ExperimentResult four = run_experiment(cfg, scn);
  REQUIRE(one.traces.size() == 4);
  REQUIRE(four.traces.size() == 4);
  CHECK(one.failures.empty());
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(one.traces[i].trial == static_cast<int>(i));
    CHECK(four.traces[i].trial == static_cast<int>(i));
    CHECK(one.traces[i].steps.back().n_t == four.traces[i].steps.back().n_t);
    CHECK(one.traces[i].evaluations().back().excess_spo_risk_test ==
          four.traces[i].evaluations().back().excess_spo_risk_test);
  }
  ExperimentConfig bad = cfg;
  bad.algorithm = "random";
  CHECK_THROWS_AS(bad.validate(), InputError);
}
