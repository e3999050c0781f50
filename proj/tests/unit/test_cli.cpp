#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("rcap_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run rcap(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(RCAP_CLI_PATH) + " " + args + " --out " + out.string() + " 2>&1";
  Run run;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return run;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) run.output += buf;
  const int status = pclose(pipe);
  run.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return run;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST(Cli, CapacityOneDimensional) {
  auto dir = scratch("cap1");
  auto run = rcap("capacity -d 1 -r 2 -n 4", dir);
  ASSERT_EQ(run.code, 0) << run.output;
  auto j = read_json(dir / "capacity.json");
  EXPECT_NEAR(j["rows"][0]["lambda"].get<double>(), 0.5, 1e-9);
  EXPECT_TRUE(fs::exists(dir / "capacity.csv"));
}

TEST(Cli, CapacityUnitBox) {
  auto dir = scratch("cap2");
  auto run = rcap("capacity -d 2 -r 2 -n 1 --dump-potential", dir);
  ASSERT_EQ(run.code, 0) << run.output;
  EXPECT_NEAR(read_json(dir / "capacity.json")["rows"][0]["lambda"].get<double>(), 4.0, 1e-12);
  EXPECT_TRUE(fs::exists(dir / "potential_n1.csv"));
}

TEST(Cli, SmallExponentIsRejected) {
  auto dir = scratch("cap3");
  auto run = rcap("capacity -d 2 -r 0.5 -n 4", dir);
  EXPECT_EQ(run.code, 2);
  EXPECT_NE(run.output.find("small_r_upper_bound"), std::string::npos) << run.output;
}

TEST(Cli, ValidationAndBudgetExitCodes) {
  auto dir = scratch("codes");
  EXPECT_EQ(rcap("capacity -d 9 -r 2 -n 2", dir).code, 2);
  EXPECT_EQ(rcap("capacity -d 2 -r 2", dir).code, 2);
  EXPECT_EQ(rcap("capacity -d 3 -r 2 -n 2000", dir).code, 4);
}

TEST(Cli, BoundsRows) {
  auto dir = scratch("bounds");
  auto run = rcap("bounds -d 2 -r 2 -n 6", dir);
  ASSERT_EQ(run.code, 0) << run.output;
  auto b = read_json(dir / "bounds.json")["bounds"];
  const double solver = b["solver"];
  for (const char* k : {"testfn_indicator", "testfn_logarithmic", "testfn_linear"}) {
    EXPECT_GE(b[k].get<double>(), solver) << k;
  }
  EXPECT_LE(b["flow_lower"].get<double>(), solver);

  auto chain = scratch("bounds1");
  ASSERT_EQ(rcap("bounds -d 1 -r 2 -n 4", chain).code, 0);
  auto c = read_json(chain / "bounds.json")["bounds"];
  EXPECT_NEAR(c["solver"].get<double>(), 0.5, 1e-9);
  EXPECT_NEAR(c["flow_lower"].get<double>(), 0.5, 1e-12);
  EXPECT_NEAR(c["testfn_linear"].get<double>(), 0.5, 1e-12);

  auto small = scratch("bounds2");
  ASSERT_EQ(rcap("bounds -d 2 -r 0.5 -n 4", small).code, 0);
  auto s = read_json(small / "bounds.json")["bounds"];
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s["small_r_upper"].get<double>(), 4.0);
}

TEST(Cli, MuOnConstantWeights) {
  auto dir = scratch("mu");
  auto run = rcap("fpp-mu -d 2 --constant 1.5 -n 4 8 --samples 3 --bootstrap 0", dir);
  ASSERT_EQ(run.code, 0) << run.output;
  EXPECT_EQ(read_json(dir / "fpp_mu.json")["mu_hat"].get<double>(), 1.5);
  EXPECT_TRUE(fs::exists(dir / "fpp_mu_samples.csv"));
}

TEST(Cli, TailBothPrintsZ) {
  auto dir = scratch("tail");
  auto run = rcap("ldp-tail -d 2 -r 0.5 -n 6 --xi 0.5 --mu 0.21 --method both --samples 400", dir);
  ASSERT_EQ(run.code, 0) << run.output;
  EXPECT_NE(run.output.find("z="), std::string::npos);
  auto j = read_json(dir / "ldp_tail.json");
  EXPECT_TRUE(j.contains("z"));
}

TEST(Cli, InclusionCheckCountsViolations) {
  auto dir = scratch("inc");
  auto run = rcap("inclusion-check --trials 50 --mu 0.69", dir);
  ASSERT_EQ(run.code, 0) << run.output;
  EXPECT_NE(run.output.find("0 violations"), std::string::npos);
  EXPECT_EQ(read_json(dir / "inclusion.json")["violations"].get<long>(), 0);
}

TEST(Cli, SumTailWritesTable) {
  auto dir = scratch("sum");
  auto run = rcap("sum-tail -k 3 -r 0.5 -n 10 20 --samples 10000", dir);
  ASSERT_EQ(run.code, 0) << run.output;
  const auto csv = slurp(dir / "sum_tail.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,p_hat,stderr,envelope,holds");
}

TEST(Cli, ConfigFileAndCommandLinePrecedence) {
  auto dir = scratch("cfg");
  const auto cfg = dir / "run.json";
  std::ofstream(cfg) << R"({"subcommand": "capacity", "d": 1, "r": 2, "n_list": [8]})";
  auto run = rcap("capacity --config " + cfg.string(), dir);
  ASSERT_EQ(run.code, 0) << run.output;
  EXPECT_NEAR(read_json(dir / "capacity.json")["rows"][0]["lambda"].get<double>(), 0.25, 1e-9);

  auto over = rcap("capacity --config " + cfg.string() + " -n 2", dir);
  ASSERT_EQ(over.code, 0) << over.output;
  EXPECT_NEAR(read_json(dir / "capacity.json")["rows"][0]["lambda"].get<double>(), 1.0, 1e-9);
}

TEST(Cli, SeedFixesOutputAcrossThreads) {
  auto a = scratch("thr1");
  auto b = scratch("thr3");
  const std::string args = "fpp-mu -d 2 -r 1 -n 4 6 --samples 100 --seed 7";
  ASSERT_EQ(rcap(args + " --threads 1", a).code, 0);
  ASSERT_EQ(rcap(args + " --threads 3", b).code, 0);
  for (const char* f : {"fpp_mu.json", "fpp_mu.csv", "fpp_mu_samples.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}
