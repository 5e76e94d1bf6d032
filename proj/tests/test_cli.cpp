#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("activerank_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

CliResult run(const std::string& args) {
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string(ACTIVERANK_CLI) + " " + args + " 2>" + err.string();
  CliResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err);
  return r;
}

TEST(Cli, HelpExitsCleanly) {
  const CliResult r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
}

TEST(Cli, UnknownFlagIsAConfigError) {
  EXPECT_EQ(run("simulate --trails 3").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST(Cli, BoundsJson) {
  const CliResult r = run("bounds --tau 0.65,0.5,0.35 --boundaries 1,3 --delta 0.1 --p-min 0.375 --format json");
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["gamma2"].get<double>(), 100.0, 1e-9);
  EXPECT_NEAR(j["lower_bound_general"].get<double>(), 10.0589869527131273, 1e-9);
  EXPECT_NEAR(j["parametric"]["btl"]["c_par"].get<double>(), 0.164, 1e-3);
  ASSERT_EQ(j["items"].size(), 3u);
  EXPECT_EQ(j["items"][0]["set"].get<int>(), 0);
  EXPECT_TRUE(j["items"][0]["t_up"].is_null());
  EXPECT_NEAR(j["items"][2]["t_up"].get<double>(), 29368.4827284064304, 1e-6);
  EXPECT_EQ(j["items"][0]["t_down"], j["items"][1]["t_up"]);
}

TEST(Cli, BoundsText) {
  const CliResult r = run("bounds --tau 0.65,0.5,0.35 --boundaries 1,3 --p-min 0.375");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("gamma^2"), std::string::npos);
  EXPECT_NE(r.out.find("100"), std::string::npos);
  EXPECT_NE(r.out.find("thurstone"), std::string::npos);
}

TEST(Cli, BoundaryTieNamesTheBoundary) {
  const CliResult r = run("bounds --tau 0.6,0.6,0.3 --boundaries 1,3");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("boundary 1"), std::string::npos) << r.err;
}

TEST(Cli, InfeasibleFitIsAConfigError) {
  const CliResult r = run("fit --tau 1,1,0,0");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("not realizable"), std::string::npos) << r.err;
}

TEST(Cli, SolverFailureExitsThree) {
  // Feasible but pinned to the boundary: Newton cannot reach it.
  const CliResult r = run("fit --tau 1,0.5,0");
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST(Cli, FitWritesAMatrixWithTheTargetScores) {
  const fs::path out = scratch() / "fit.json";
  const CliResult r = run("fit --tau 0.7,0.55,0.45,0.3 --family thurstone --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const json m = json::parse(slurp(out));
  EXPECT_EQ(m["n"].get<int>(), 4);
  const json report = json::parse(r.err);
  EXPECT_LT(report["residual"].get<double>(), 1e-9);
  EXPECT_LT(report["kkt_residual"].get<double>(), 1e-8);
}

TEST(Cli, SimulateIsReproducible) {
  const fs::path a = scratch() / "a.csv", b = scratch() / "b.csv";
  const std::string args = "simulate --model eta:1 --n 5 --boundaries 2,5 --alpha relaxed_b --trials 6 --seed 11 ";
  ASSERT_EQ(run(args + "--out " + a.string()).code, 0);
  ASSERT_EQ(run(args + "--threads 3 --out " + b.string()).code, 0);
  const std::string csv = slurp(a);
  EXPECT_EQ(csv, slurp(b));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  const json s = json::parse(slurp(scratch() / "a.summary.json"));
  EXPECT_EQ(s["trials"].get<int>(), 6);
  EXPECT_EQ(s["config"]["seed"].get<int>(), 11);
  EXPECT_EQ(s["algorithm"], "active");
}

TEST(Cli, ConfigFileAndOverrides) {
  const fs::path cfg = scratch() / "cfg.json";
  std::ofstream(cfg) << R"({"model": "eta:1", "n": 4, "boundaries": [1, 4], "alpha": "relaxed_b", "trials": 2, "seed": 3})";
  const CliResult base = run("simulate --config " + cfg.string());
  ASSERT_EQ(base.code, 0) << base.err;
  EXPECT_EQ(std::count(base.out.begin(), base.out.end(), '\n'), 3);
  const CliResult more = run("simulate --config " + cfg.string() + " --trials 4");
  ASSERT_EQ(more.code, 0) << more.err;
  EXPECT_EQ(std::count(more.out.begin(), more.out.end(), '\n'), 5);

  std::ofstream(cfg) << R"({"model": "eta:1", "trails": 2})";
  const CliResult bad = run("simulate --config " + cfg.string());
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("trails"), std::string::npos);

  std::ofstream(cfg) << "{\"model\": \n \"eta:1\",, }";
  const CliResult broken = run("simulate --config " + cfg.string());
  EXPECT_EQ(broken.code, 2);
  EXPECT_NE(broken.err.find("line 2"), std::string::npos) << broken.err;
}

TEST(Cli, RoundLogHasOneRecordPerRound) {
  const fs::path log = scratch() / "rounds.jsonl";
  const CliResult r = run("simulate --model eta:1 --n 3 --boundaries 1,3 --alpha relaxed_b --trials 1 --round-log " +
                    log.string());
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(log);
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    const json rec = json::parse(line);
    EXPECT_EQ(rec["t"].get<int>(), ++count);
  }
  EXPECT_GT(count, 0);
}

TEST(Cli, BaselineRuns) {
  const CliResult r = run("baseline --model eta:1 --n 4 --boundaries 1,4 --budget 2000 --trials 3 --seed 5");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 4);
  EXPECT_EQ(run("baseline --model eta:1 --n 4 --boundaries 1,4 --trials 3").code, 2);
}

TEST(Cli, BadModelIsAConfigError) {
  EXPECT_EQ(run("simulate --model gauss:1 --n 4 --boundaries 1,4").code, 2);
  EXPECT_EQ(run("simulate --model eta:1 --n 4 --boundaries 1,5").code, 2);
  EXPECT_EQ(run("simulate --model eta:1 --n 4 --boundaries 1,4 --delta 1.5").code, 2);
}

}  // namespace
