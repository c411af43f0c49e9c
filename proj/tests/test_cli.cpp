#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "zonempc/cli.hpp"
#include "zonempc/matrix_io.hpp"
#include "zonempc/metrics.hpp"
#include "zonempc/run_config.hpp"
#include "zonempc/scenario.hpp"
#include "zonempc/stability.hpp"

using namespace zonempc;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = 0;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "zonempc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("zonempc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Two-hour version of the default scenario so runs stay short.
  std::string short_scenario() {
    Scenario s = build_default_scenario();
    s.duration = 2 * 3600.0;
    const std::string path = (dir_ / "short.json").string();
    save_scenario(s, path);
    return path;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST(CliHelp, MatchesGoldenFiles) {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"", "help_main.txt"},           {"run", "help_run.txt"},         {"certify", "help_certify.txt"},
      {"scenario-gen", "help_scenario-gen.txt"}, {"metrics", "help_metrics.txt"},
      {"dump-config", "help_dump-config.txt"},   {"model", "help_model.txt"}};
  for (const auto& [sub, file] : cases) {
    std::vector<std::string> args;
    if (!sub.empty()) args.push_back(sub);
    args.push_back("--help");
    const CliResult r = cli(args);
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_EQ(r.out, slurp(fs::path(ZONEMPC_GOLDEN_DIR) / file)) << sub;
  }
}

TEST(CliHelp, DocumentsEveryRunFlag) {
  const std::string help = cli({"run", "--help"}).out;
  for (const char* flag : {"--model", "--scenario", "--controller", "--horizon-p", "--horizon-m", "--coordination",
                           "--no-preview", "--out", "--jobs", "--seed", "--config"})
    EXPECT_NE(help.find(flag), std::string::npos) << flag;
}

TEST(CliHelp, UnknownFlagIsConfigError) {
  EXPECT_EQ(cli({"run", "--bogus"}).code, kExitConfigError);
  EXPECT_EQ(cli({}).code, kExitConfigError);
  EXPECT_EQ(cli({"run", "--horizon-p", "4", "--horizon-m", "6"}).code, kExitConfigError);
}

TEST_F(CliTest, MissingModelFileIsConfigError) {
  const CliResult r = cli({"run", "--model", path("nope.json"), "--out", path("o")});
  EXPECT_EQ(r.code, kExitConfigError);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, RunBothWritesComparison) {
  const CliResult r = cli({"run", "--scenario", short_scenario(), "--out", path("o"), "--no-timing"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"trace_centralized.csv", "trace_distributed.csv", "metrics.csv", "report.txt", "config.json"})
    EXPECT_TRUE(fs::exists(dir_ / "o" / f)) << f;
  const std::string report = slurp(dir_ / "o" / "report.txt");
  EXPECT_NE(report.find("[delta distributed vs centralized]"), std::string::npos);
  EXPECT_NE(report.find("forecast mode: preview"), std::string::npos);
  std::ifstream m(dir_ / "o" / "metrics.csv");
  EXPECT_EQ(read_metrics_csv(m).size(), 2u);
}

TEST_F(CliTest, NoPreviewRecordedInHeader) {
  const CliResult r = cli({"run", "--scenario", short_scenario(), "--controller", "centralized", "--no-preview",
                           "--out", path("o")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(dir_ / "o" / "report.txt").find("forecast mode: persistence"), std::string::npos);
}

TEST_F(CliTest, ConfigRoundTripReproducesRun) {
  const std::string scen = short_scenario();
  const std::vector<std::string> flags{"--scenario", scen, "--controller", "distributed", "--coordination", "dual",
                                       "--horizon-p", "12", "--horizon-m", "3", "--no-timing"};
  std::vector<std::string> dump{"dump-config", "--file", path("cfg.json")};
  dump.insert(dump.end(), flags.begin(), flags.end());
  ASSERT_EQ(cli(dump).code, 0);
  std::vector<std::string> direct{"run", "--out", path("a")};
  direct.insert(direct.end(), flags.begin(), flags.end());
  ASSERT_EQ(cli(direct).code, 0);
  ASSERT_EQ(cli({"run", "--config", path("cfg.json"), "--out", path("b")}).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "trace_distributed.csv"), slurp(dir_ / "b" / "trace_distributed.csv"));
  const RunConfig cfg = load_config(path("cfg.json"));
  EXPECT_EQ(cfg.P, 12);
  EXPECT_EQ(cfg.M, 3);
}

TEST_F(CliTest, ConcurrentJobsGiveSameTraces) {
  const std::string scen = short_scenario();
  ASSERT_EQ(cli({"run", "--scenario", scen, "--no-timing", "--out", path("a")}).code, 0);
  ASSERT_EQ(cli({"run", "--scenario", scen, "--no-timing", "--jobs", "2", "--out", path("b")}).code, 0);
  for (const char* f : {"trace_centralized.csv", "trace_distributed.csv", "metrics.csv"})
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
}

TEST_F(CliTest, TranscriptWritten) {
  ASSERT_EQ(cli({"run", "--scenario", short_scenario(), "--controller", "distributed", "--transcript", "--out",
                 path("o")})
                .code,
            0);
  const std::string t = slurp(dir_ / "o" / "transcript_distributed.csv");
  EXPECT_FALSE(t.empty());
}

TEST_F(CliTest, CertifyDefaultDistributed) {
  const CliResult r = cli({"certify", "--steps", "40", "--out", path("cert.txt")});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const LyapunovCertificate c = certificate_from_bundle(load_matrix_text(path("cert.txt")));
  EXPECT_GE(c.bound, 1.0);
  EXPECT_LT(c.spectral_radius, 1.0);
  const CliResult check = cli({"certify", "--check", path("cert.txt")});
  EXPECT_EQ(check.code, 0);
  EXPECT_NE(check.out.find("certificate verified"), std::string::npos);
}

TEST_F(CliTest, CertifyIdentityMatrixFails) {
  MatrixBundle b;
  b.add("A", Eigen::MatrixXd::Identity(3, 3));
  save_matrix_text(path("a.txt"), b);
  const CliResult r = cli({"certify", "--matrix", path("a.txt")});
  EXPECT_EQ(r.code, kExitCertifyFailure);
  EXPECT_NE(r.err.find("spectral radius 1"), std::string::npos) << r.err;
}

TEST_F(CliTest, CertifyMatrixAndCheckRoundTrip) {
  MatrixBundle b;
  b.add("A", (Eigen::MatrixXd(2, 2) << 0.5, 0.1, 0.0, 0.3).finished());
  save_matrix_text(path("a.txt"), b);
  ASSERT_EQ(cli({"certify", "--matrix", path("a.txt"), "--out", path("cert.txt")}).code, 0);
  EXPECT_EQ(cli({"certify", "--check", path("cert.txt")}).code, 0);
  // A tampered certificate is rejected.
  MatrixBundle tampered = load_matrix_text(path("cert.txt"));
  for (auto& [name, m] : tampered.matrices)
    if (name == "P") m(0, 0) *= 1.01;
  save_matrix_text(path("bad.txt"), tampered);
  EXPECT_EQ(cli({"certify", "--check", path("bad.txt")}).code, kExitCertifyFailure);
}

TEST_F(CliTest, ScenarioGenRoundTrip) {
  ASSERT_EQ(cli({"scenario-gen", "--seed", "7", "--out", path("s.json")}).code, 0);
  const Scenario s = load_scenario(path("s.json"));
  EXPECT_EQ(s.seed, 7u);
  EXPECT_EQ(s.zones(), 6);
  const CliResult step = cli({"scenario-gen", "--step-size", "10"});
  ASSERT_EQ(step.code, 0);
  const Scenario st = scenario_from_json(nlohmann::json::parse(step.out));
  EXPECT_EQ(st.disturbance.kind, DisturbanceProfile::Kind::kStep);
}

TEST_F(CliTest, MetricsRecomputedFromTraces) {
  ASSERT_EQ(cli({"run", "--scenario", short_scenario(), "--no-timing", "--out", path("o")}).code, 0);
  const CliResult r = cli({"metrics", "--trace", path("o/trace_centralized.csv"), "--trace",
                           path("o/trace_distributed.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream fresh(r.out);
  std::ifstream saved(dir_ / "o" / "metrics.csv");
  const auto a = read_metrics_csv(fresh);
  const auto b = read_metrics_csv(saved);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a[i].controller, b[i].controller);
    EXPECT_EQ(a[i].overshoot, b[i].overshoot);
    EXPECT_EQ(a[i].control_area, b[i].control_area);
    EXPECT_EQ(a[i].rmse, b[i].rmse);
  }
  EXPECT_EQ(cli({"metrics", "--trace", path("missing.csv")}).code, kExitConfigError);
}

TEST_F(CliTest, ModelCommandWritesFiles) {
  ASSERT_EQ(cli({"model", "--out", path("b.json"), "--matrices", path("m.txt")}).code, 0);
  const MatrixBundle m = load_matrix_text(path("m.txt"));
  EXPECT_EQ(m.matrix("A").rows(), 6);
  const CliResult r = cli({"run", "--model", path("b.json"), "--scenario", short_scenario(), "--controller",
                           "centralized", "--out", path("o")});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, PlantDivergenceIsSolverFailure) {
  std::ifstream in(fs::path(ZONEMPC_DATA_DIR) / "default_building.json");
  nlohmann::json j = nlohmann::json::parse(in);
  j["zones"][0]["air_mass"] = 1e-4;
  std::ofstream(path("stiff.json")) << j.dump();
  const CliResult r = cli({"run", "--model", path("stiff.json"), "--scenario", short_scenario(), "--controller",
                           "centralized", "--out", path("o")});
  EXPECT_EQ(r.code, kExitSolverFailure);
  EXPECT_NE(r.err.find("zone 1"), std::string::npos) << r.err;
}
