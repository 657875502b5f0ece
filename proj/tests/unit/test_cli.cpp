#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "commands.hpp"

using namespace gil;
using namespace gil::cli;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("gil_cli_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

int run_args(std::vector<std::string> args) {
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST(CliSchema, ValidatorReportsViolations) {
  const auto& schema = experiment_schema();
  EXPECT_TRUE(validate(json::parse(R"({"potential":{"family":"gaussian"},"d":1,"m":3,"beta":1})"), schema).empty());
  EXPECT_FALSE(validate(json::parse(R"({"potential":{"family":"gaussian"},"d":0,"m":3,"beta":1})"), schema).empty());
  EXPECT_FALSE(validate(json::parse(R"({"potential":{"family":"quartic"},"d":1,"m":3,"beta":1})"), schema).empty());
  EXPECT_FALSE(
      validate(json::parse(R"({"potential":{"family":"gaussian"},"d":1,"m":3,"beta":1,"typo":2})"), schema).empty());
  EXPECT_FALSE(validate(json::parse(R"({"potential":{"family":"gaussian"},"d":1,"m":3,"beta":-1})"), schema).empty());
  EXPECT_FALSE(validate(json::parse(R"({"potential":{"family":"gaussian"},"d":1,"m":3,"beta":"1"})"), schema).empty());
}

TEST(CliParseConfig, RejectsInconsistentInput) {
  EXPECT_THROW(parse_config("{", "check"), ConfigError);
  EXPECT_THROW(parse_config(R"({"potential":{"family":"gaussian","a":1},"d":1,"m":3,"beta":1})", "check"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"potential":{"family":"gaussian"},"d":1,"m":3})", "check"), ConfigError);
  EXPECT_THROW(
      parse_config(R"({"potential":{"family":"gaussian"},"d":1,"m":3,"beta":1,"beta_threshold_fraction":0.5})",
                   "check"),
      ConfigError);
  EXPECT_THROW(parse_config(R"({"potential":{"family":"gaussian"},"d":1,"m":3,"beta":1})", "verify-lemma"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"potential":{"family":"gaussian"},"d":1,"m":3,"beta":1})", "free-energy"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"potential":{"family":"gaussian"},"d":1,"m":3,"beta":1})", "bogus"), ConfigError);
}

TEST(CliCheck, ExitCodes) {
  auto at = [](const std::string& potential, double fraction) {
    return cmd_check(parse_config(R"({"potential":)" + potential + R"(,"d":1,"m":3,"beta_threshold_fraction":)" +
                                      std::to_string(fraction) + "}",
                                  "check"));
  };
  const auto a = at(R"({"family":"example_a","a":0.5})", 1.0);
  EXPECT_EQ(a.exit_code, kOk);
  EXPECT_NEAR(json::parse(a.content)["lhs_fcond"].get<double>(), 0.5, 1e-12);
  EXPECT_EQ(at(R"({"family":"example_b","delta":0.5})", 2.0).exit_code, kViolation);
  EXPECT_EQ(at(R"({"family":"example_b","delta":0.5})", 0.5).exit_code, kOk);
  const auto g = cmd_check(parse_config(R"({"potential":{"family":"gaussian"},"d":3,"m":3,"beta":1e6})", "check"));
  EXPECT_EQ(g.exit_code, kOk);
}

TEST(CliFreeEnergy, EmptyGridGivesHeaderOnly) {
  const auto out =
      cmd_free_energy(parse_config(R"({"potential":{"family":"gaussian"},"d":2,"m":3,"beta":1,"u_grid":[]})",
                                   "free-energy"));
  EXPECT_EQ(out.exit_code, kOk);
  EXPECT_EQ(out.content, "u_1,u_2,delta_f,method,error\n");
}

TEST(CliFreeEnergy, GaussianQuadraticInTilt) {
  const auto out = cmd_free_energy(parse_config(
      R"({"potential":{"family":"gaussian"},"d":1,"m":4,"beta":2,"u_grid":[0.0,0.5,-1.0]})", "free-energy"));
  const auto rows = lines(out.content);
  ASSERT_EQ(rows.size(), 4u);
  const double expected[3] = {0.0, 0.5, 2.0};
  for (int k = 0; k < 3; ++k) {
    std::istringstream in(rows[k + 1]);
    std::string u, df, method;
    std::getline(in, u, ',');
    std::getline(in, df, ',');
    std::getline(in, method, ',');
    EXPECT_NEAR(std::stod(df), expected[k], 1e-8) << rows[k + 1];
    EXPECT_EQ(method, "oracle");
  }
}

TEST(CliHessian, GaussianPasses) {
  const auto out = cmd_hessian(
      parse_config(R"({"potential":{"family":"gaussian"},"d":1,"m":3,"beta":1,"u_grid":[0.0,0.3]})", "hessian"));
  EXPECT_EQ(out.exit_code, kOk);
  EXPECT_EQ(lines(out.content).size(), 3u);
}

TEST(CliRun, WritesFilesAndReportsErrors) {
  TempDir dir;
  const auto cfg = dir / "cfg.json";
  const auto out = dir / "out.json";
  std::ofstream(cfg) << R"({"potential":{"family":"example_a","a":0.5},"d":1,"m":3,"beta_threshold_fraction":1})";
  EXPECT_EQ(run_args({"gil", "check", "--config", cfg.string(), "--out", out.string()}), kOk);
  EXPECT_NEAR(json::parse(slurp(out))["lhs_fcond"].get<double>(), 0.5, 1e-12);
  EXPECT_EQ(run_args({"gil", "check", "--config", (dir / "missing.json").string(), "--out", out.string()}),
            kConfigError);
  EXPECT_EQ(run_args({"gil", "check"}), kConfigError);
  EXPECT_EQ(run_args({"gil", "nonsense"}), kConfigError);
  std::ofstream(cfg) << R"({"potential":{"family":"gaussian"},"d":1,"m":3,"beta":1,"unknown":1})";
  EXPECT_EQ(run_args({"gil", "check", "--config", cfg.string(), "--out", out.string()}), kConfigError);
}

TEST(CliRun, SampleIsDeterministic) {
  TempDir dir;
  const auto cfg = dir / "cfg.json";
  std::ofstream(cfg) << R"({"potential":{"family":"example_b","delta":0.5},"d":1,"m":4,"beta":1,
    "chain":{"n_steps":2000,"burn_in":200,"n_chains":2},"checkpoint_every":50,"seed":3})";
  const auto a = dir / "a.jsonl";
  const auto b = dir / "b.jsonl";
  const auto c = dir / "c.jsonl";
  ASSERT_EQ(run_args({"gil", "sample", "--config", cfg.string(), "--out", a.string(), "--threads", "1"}), kOk);
  ASSERT_EQ(run_args({"gil", "sample", "--config", cfg.string(), "--out", b.string(), "--threads", "2"}), kOk);
  ASSERT_EQ(run_args({"gil", "sample", "--config", cfg.string(), "--out", c.string(), "--seed", "4"}), kOk);
  const std::string sa = slurp(a);
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, slurp(b));
  EXPECT_NE(sa, slurp(c));
}
