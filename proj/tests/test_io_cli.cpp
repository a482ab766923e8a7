#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "coevo/io.hpp"

using namespace coevo;
namespace fs = std::filesystem;

namespace {

const std::string kCli = COEVO_CLI_PATH;
const std::string kData = COEVO_TEST_DATA;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("coevo_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& out, const std::string& stdout_file = "") {
  std::string cmd = "\"" + kCli + "\" " + args + " --set out.dir=" + out.string();
  cmd += stdout_file.empty() ? " > /dev/null 2>&1" : " > \"" + stdout_file + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing", "[io]") {
  RunConfig cfg;
  std::istringstream in("# comment\n\n game.b11 = 3 \nn=5\ntemperature = 0.25\ngrid.ci.steps = 7\nout.dir = /tmp/x\n");
  parse_config(cfg, in);
  CHECK(cfg.game.b11 == 3.0);
  CHECK(cfg.n == 5);
  CHECK(cfg.temperature == 0.25);
  CHECK(cfg.grid_ci.steps == 7);
  CHECK(cfg.out_dir == "/tmp/x");
  CHECK_NOTHROW(validate_config(cfg));

  std::istringstream typo("n = 3\ntemprature = 0.2\n");
  RunConfig other;
  try {
    parse_config(other, typo);
    FAIL("typo accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("temprature") != std::string::npos);
  }

  RunConfig c2;
  CHECK_THROWS_AS(apply_setting(c2, "n = three"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c2, "n"), ConfigError);
  CHECK_THROWS_AS(apply_setting(c2, "seed = "), ConfigError);
  apply_setting(c2, "temperature = -1");
  CHECK_THROWS_AS(validate_config(c2), ConfigError);
  RunConfig c3;
  apply_setting(c3, "grid.t.min = 2");
  CHECK_THROWS_AS(validate_config(c3), ConfigError);
}

TEST_CASE("number formatting round-trips", "[io]") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678}) CHECK(std::stod(fmt(v)) == v);
  const auto s = random_interior(4, 5);
  const auto back = state_from_json(to_json(s));
  CHECK(back.p == s.p);
  CHECK(back.c == s.c);
}

TEST_CASE("cli exit codes", "[cli]") {
  const auto out = scratch("codes");
  CHECK(run_cli("critical-temp -c " + kData + "/unknown_key.cfg", out) == 1);
  CHECK(run_cli("critical-temp -c " + kData + "/bad_range.cfg", out) == 1);
  CHECK(run_cli("critical-temp -c " + kData + "/missing.cfg", out) == 1);
  CHECK(run_cli("integrate --set n=1", out) == 1);
  CHECK_FALSE(fs::exists(out));

  CHECK(run_cli("simulate --set temperature=0.1 --set game.b11=1e13 --steps 50", out) == 2);
  CHECK(run_cli("nonsense", out) == 1);
}

TEST_CASE("critical temperature from the command line", "[cli]") {
  const auto out = scratch("critical");
  const std::string log = (fs::temp_directory_path() / "coevo_test_critical.txt").string();
  REQUIRE(run_cli("critical-temp -c " + kData + "/coordination.cfg", out, log) == 0);
  const double tc = std::stod(slurp(log));
  CHECK(tc >= 0.35);
  CHECK(tc <= 0.37);
  CHECK(fs::exists(out / "critical_temp.json"));
}

TEST_CASE("fixed points of the prisoner's dilemma from the command line", "[cli]") {
  const auto out = scratch("fixed");
  REQUIRE(run_cli("fixed-points -c " + kData + "/pd.cfg --starts 20", out) == 0);
  const auto csv = slurp(out / "rest_points.csv");
  for (const char* label : {"PairPlusIsolated", "Star", "SymmetricUniform", "CyclicNonReciprocated"}) {
    CHECK(csv.find(label) != std::string::npos);
  }
}

TEST_CASE("outputs do not depend on the thread count", "[cli][property]") {
  const auto one = scratch("threads1"), four = scratch("threads4");
  const std::string args = "fixed-points -c " + kData + "/coordination.cfg --starts 16";
  REQUIRE(run_cli(args + " -j 1", one) == 0);
  REQUIRE(run_cli(args + " -j 4", four) == 0);
  CHECK(slurp(one / "rest_points.csv") == slurp(four / "rest_points.csv"));

  const std::string census = "census -c " + kData + "/pd.cfg --set temperature=0.01 --set horizon=2000 --trials 12";
  REQUIRE(run_cli(census + " -j 1", one) == 0);
  REQUIRE(run_cli(census + " -j 3", four) == 0);
  CHECK(slurp(one / "census.csv") == slurp(four / "census.csv"));

  const std::string integ = "integrate -c " + kData + "/coordination.cfg --stride 1";
  REQUIRE(run_cli(integ, one) == 0);
  REQUIRE(run_cli(integ, four) == 0);
  CHECK(slurp(one / "trajectory.csv") == slurp(four / "trajectory.csv"));
  CHECK_FALSE(slurp(one / "trajectory.csv").empty());
}
