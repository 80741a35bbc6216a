#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "erw/cli.hpp"
#include "erw/params.hpp"
#include "json.hpp"

using namespace erw;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "erw");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("erw_cli_test_" + name);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) {
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  }
  return lines;
}

}  // namespace

TEST(Cli, SimulateSinglePathIsDeterministic) {
  const auto a = run({"simulate", "--p", "0.5", "--q", "0.5", "--n", "100", "--paths", "1", "--seed", "7"});
  const auto b = run({"simulate", "--p", "0.5", "--q", "0.5", "--n", "100", "--paths", "1", "--seed", "7"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto lines = data_lines(a.out);
  ASSERT_EQ(lines.size(), 101u);
  EXPECT_EQ(lines[0], "k,eta_k,X_k");
  EXPECT_NE(a.out.find("# version="), std::string::npos);
  EXPECT_NE(a.out.find("# seed=7"), std::string::npos);
  EXPECT_NE(a.err.find("X_n="), std::string::npos);
}

TEST(Cli, SimulateRejectsPOne) {
  const auto r = run({"simulate", "--p", "1.0", "--n", "10"});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, SimulateEnsembleSummaryAndDump) {
  const auto dump = temp_file("dump.csv");
  const auto r = run({"simulate", "--p", "0.6", "--n", "200", "--paths", "50", "--checkpoints", "100,200",
                      "--dump-paths", dump.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].substr(0, 16), "n,paths,mean,var");
  const auto dumped = data_lines(slurp(dump));
  EXPECT_EQ(dumped.size(), 101u);
  EXPECT_EQ(dumped[0], "path_id,n,X_n");
  std::filesystem::remove(dump);
}

TEST(Cli, MomentsTable) {
  const auto r = run({"moments", "--p", "0.5", "--q", "0.5", "--n", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 11u);
  EXPECT_EQ(lines[0], "n,mean,second_moment,variance");
  for (int n = 1; n <= 10; ++n) {
    EXPECT_EQ(lines[static_cast<std::size_t>(n)], std::to_string(n) + ",0," + std::to_string(n) + "," + std::to_string(n));
  }
  EXPECT_NE(r.out.find("# method=recursion"), std::string::npos);
  EXPECT_NE(r.out.find("# q=0.5"), std::string::npos);
}

TEST(Cli, ScalingTable) {
  auto r = run({"scaling", "--p", "0.75", "--n", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto lines = data_lines(r.out);
  EXPECT_EQ(lines[1].substr(0, 4), "1,1,");
  EXPECT_EQ(lines[2].substr(0, 6), "2,1.5,");
  EXPECT_EQ(lines[3].substr(0, 8), "3,1.875,");
  r = run({"scaling", "--p", "0.6", "--q", "0.3", "--n", "1"});
  lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[1], "1,1,0.21");
}

TEST(Cli, VerifyRegimeError) {
  EXPECT_EQ(run({"verify", "clt", "--p", "0.9"}).code, kExitRegime);
  EXPECT_EQ(run({"couple", "--p", "0.8"}).code, kExitRegime);
}

TEST(Cli, VerifyCltSmallRunWritesJson) {
  const auto report = temp_file("clt.json");
  const auto r = run({"verify", "clt", "--p", "0.5", "--n", "1000", "--paths", "20000", "--seed", "3", "--out",
                      report.string()});
  EXPECT_EQ(r.code, 0) << r.err << r.out;
  const auto j = nlohmann::json::parse(slurp(report));
  EXPECT_EQ(j["reports"][0]["test"], "clt");
  EXPECT_EQ(j["reports"][0]["verdict"], "pass");
  EXPECT_EQ(j["config"]["seed"], "3");
  std::filesystem::remove(report);
}

TEST(Cli, VerdictFailureExitCode) {
  // Ten paths cannot reach the KS tolerance.
  const auto r = run({"verify", "clt", "--p", "0.5", "--n", "100", "--paths", "10"});
  EXPECT_EQ(r.code, kExitVerdictFail);
}

TEST(Cli, SweepCsv) {
  const auto r = run({"verify", "sweep", "--p-grid", "0.5,0.9", "--checkpoints", "100,1000,10000", "--paths", "500",
                      "--format", "csv"});
  ASSERT_TRUE(r.code == 0 || r.code == kExitVerdictFail) << r.err;
  const auto lines = data_lines(r.out);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "p,exponent,model,power_slope,expected");
  EXPECT_EQ(lines[1].substr(0, 4), "0.5,");
}

TEST(Cli, CoupleSingleAndMany) {
  auto r = run({"couple", "--p", "0.5", "--n", "1000", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, run({"couple", "--p", "0.5", "--n", "1000", "--seed", "3"}).out);
  EXPECT_NE(r.err.find("T_n/s2_n="), std::string::npos);
  EXPECT_EQ(data_lines(r.out).size(), 1001u);
  r = run({"couple", "--p", "0.6", "--n", "200", "--traces", "4", "--checkpoints", "100,200", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["traces"], 4);
  EXPECT_EQ(j["checkpoints"].size(), 2u);
}

TEST(Cli, ConfigFileWithFlagPrecedence) {
  const auto cfg = temp_file("run.cfg");
  {
    std::ofstream os(cfg);
    os << "# experiment\np = 0.6\nn = 30\nseed = 11\npaths = 1\n";
  }
  const auto from_file = run({"simulate", "--config", cfg.string()});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_NE(from_file.out.find("# p=0.6"), std::string::npos);
  EXPECT_EQ(data_lines(from_file.out).size(), 31u);
  const auto overridden = run({"simulate", "--config", cfg.string(), "--n", "40"});
  EXPECT_EQ(data_lines(overridden.out).size(), 41u);
  EXPECT_NE(overridden.out.find("# p=0.6"), std::string::npos);
  {
    std::ofstream os(cfg);
    os << "colour = blue\n";
  }
  EXPECT_EQ(run({"simulate", "--config", cfg.string()}).code, kExitValidation);
  std::filesystem::remove(cfg);
}

TEST(Cli, OutputsIndependentOfWorkers) {
  const auto a = run({"simulate", "--p", "0.7", "--n", "500", "--paths", "300", "--checkpoints", "50,500",
                      "--workers", "1"});
  const auto b = run({"simulate", "--p", "0.7", "--n", "500", "--paths", "300", "--checkpoints", "50,500",
                      "--workers", "4"});
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.find("workers"), std::string::npos);
}

TEST(Cli, ValidationErrors) {
  EXPECT_EQ(run({}).code, kExitValidation);
  EXPECT_EQ(run({"simulate", "--n", "abc"}).code, kExitValidation);
  EXPECT_EQ(run({"simulate", "--mode", "fast"}).code, kExitValidation);
  EXPECT_EQ(run({"simulate", "--n", "10", "--checkpoints", "20"}).code, kExitValidation);
  EXPECT_EQ(run({"verify", "nothing"}).code, kExitValidation);
  EXPECT_EQ(run({"moments", "--format", "xml"}).code, kExitValidation);
  EXPECT_EQ(run({"couple", "--kappa", "0"}).code, kExitValidation);
  EXPECT_EQ(run({"simulate", "--out", "/nonexistent-dir/out.csv"}).code, kExitValidation);
}

TEST(Cli, ResourceErrorExitCode) {
  EXPECT_EQ(run({"simulate", "--mode", "faithful", "--n", "2000000000", "--paths", "1"}).code, kExitResource);
}

TEST(Cli, HelpExitsCleanly) { EXPECT_EQ(run({"--help"}).code, 0); }
