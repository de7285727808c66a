#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "oracles.hpp"
#include "wsl/config.hpp"
#include "wsl/report.hpp"

using namespace wsl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("wsl_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

int run(const std::string& command, const fs::path& config, const fs::path& out, int threads = 1) {
  std::string cmd = std::string(WSL_BINARY) + " " + command + " --config " + config.string() + " --out " + out.string() +
                    " --threads " + std::to_string(threads) + " > " + (out.string() + ".log") + " 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, DefaultsAreWrittenBack) {
  auto c = parse_config(Json::parse(R"({"tube": {"shape": {"kind": "ellipse"}}})"));
  EXPECT_EQ(shape_kind(c.tube.shape), "ellipse");
  EXPECT_DOUBLE_EQ(c.resolved["tube"]["shape"]["a"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(c.resolved["tube"]["shape"]["b"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(c.resolved["discretization"]["h_mesh"].get<double>(), 0.2);
  EXPECT_EQ(c.resolved["discretization"]["end_condition"], "dirichlet");
  EXPECT_TRUE(c.resolved.contains("seed"));
  // resolved config parses to itself
  auto again = parse_config(c.resolved);
  EXPECT_EQ(again.resolved.dump(), c.resolved.dump());
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(parse_config(Json::parse(R"({"tube": {"radius": 1}})")), ConfigError);
  EXPECT_THROW(parse_config(Json::parse(R"({"discretisation": {}})")), ConfigError);
  // keys of an unselected preset are unknown too
  EXPECT_THROW(parse_config(Json::parse(R"({"tube": {"curve": {"preset": "line", "peak": 1}}})")), ConfigError);
  try {
    parse_config(Json::parse(R"({"alpha": {"kind": "bump", "widht": 2}})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("alpha.widht"), std::string::npos);
  }
}

TEST(Config, BadValuesRejected) {
  EXPECT_THROW(parse_config(Json::parse(R"({"discretization": {"h_mesh": -1}})")), ConfigError);
  EXPECT_THROW(parse_config(Json::parse(R"({"discretization": {"end_condition": "periodic"}})")), ConfigError);
  EXPECT_THROW(parse_config(Json::parse(R"({"k": 2.5})")), ConfigError);
  EXPECT_THROW(parse_config(Json::parse(R"({"interval": [1, 0]})")), ConfigError);
  EXPECT_THROW(parse_config(Json::parse(R"({"partition": [[0, 1, 2]]})")), ConfigError);
  EXPECT_THROW(parse_config(Json::parse(R"({"tube": {"shape": {"kind": "annulus", "r_in": 2, "r_out": 1}}})")), ConfigError);
  EXPECT_THROW(parse_config(Json::parse(R"({"alpha": {"kind": "samples", "s": [0, 1], "v": [1]}})")), ConfigError);
  auto c = parse_config(Json::parse(R"({"tube": {"curve": {"preset": "samples", "s": [0, 1], "kappa": [-1, 0], "tau": [0, 0]}}})"));
  EXPECT_THROW(build_tube(c.tube), ConfigError);
}

TEST(Config, CommentsAndReportsAccepted) {
  auto dir = scratch("comments");
  auto p = write_config(dir, "// leading comment\n{\n  /* block */ \"k\": 3\n}\n");
  EXPECT_EQ(parse_config(load_config_json(p.string())).k, 3);
  Json report = {{"command", "x"}, {"config", {{"k", 5}}}, {"results", Json::object()}};
  std::ofstream(dir / "report.json") << report.dump();
  EXPECT_EQ(parse_config(load_config_json((dir / "report.json").string())).k, 5);
  EXPECT_THROW(load_config_json((dir / "missing.json").string()), ConfigError);
}

TEST(Report, ExactNumbersRoundTrip) {
  for (double x : {0.1, 1.0 / 3.0, 2.0 * oracle::pi * oracle::pi, 1e-300, -123456.789})
    EXPECT_EQ(std::strtod(exact(x).c_str(), nullptr), x);
}

TEST(Cli, GeometryCheckStraightTube) {
  auto dir = scratch("geometry");
  auto cfg = write_config(dir, R"({"tube": {"half_length": 3, "shape": {"kind": "disc"}}, "samples": 2000})");
  ASSERT_EQ(run("geometry-check", cfg, dir / "out"), 0);
  auto r = read_json(dir / "out" / "report.json");
  EXPECT_EQ(r["results"]["margin"].get<double>(), 1.0);
  EXPECT_TRUE(r["passed"].get<bool>());
  EXPECT_EQ(r["command"], "geometry-check");
  for (const auto& a : r["artifacts"]) EXPECT_TRUE(fs::exists(dir / "out" / a["file"].get<std::string>()));
  auto header = read_text(dir / "out" / "frames.csv").substr(0, 40);
  EXPECT_EQ(header.substr(0, header.find('\n')), "s,e1x,e1y,e1z,e2x,e2y,e2z,e3x,e3y,e3z");
}

TEST(Cli, CrossSectionUnitSquare) {
  auto dir = scratch("square");
  auto cfg = write_config(dir, R"({"tube": {"shape": {"kind": "rectangle", "width": 1, "height": 1}},
                                   "discretization": {"h_mesh": 0.03125}, "k": 2})");
  ASSERT_EQ(run("cross-section", cfg, dir / "out"), 0);
  auto r = read_json(dir / "out" / "report.json");
  double e1 = r["results"]["E1"].get<double>(), exact_e1 = 2 * oracle::pi * oracle::pi;
  EXPECT_NEAR(e1, exact_e1, 5e-3 * exact_e1);
  EXPECT_GT(r["results"]["c_omega"]["value"].get<double>(), 0.0);
  auto svg = read_text(dir / "out" / "spectrum.svg");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("<!-- data"), std::string::npos);
}

TEST(Cli, TwistThresholdFlagsInvariantDisc) {
  auto dir = scratch("disc");
  auto cfg = write_config(dir, R"({"tube": {"shape": {"kind": "disc"}}, "discretization": {"h_mesh": 0.2, "ds": 0.1},
                                   "alpha": {"kind": "constant", "value": 1}, "L_list": [2]})");
  ASSERT_EQ(run("twist-threshold", cfg, dir / "out"), 0);
  auto r = read_json(dir / "out" / "report.json");
  ASSERT_EQ(r["results"]["flags"].size(), 1u);
  EXPECT_EQ(r["results"]["flags"][0], "twist ineffective: rotationally invariant");
  EXPECT_LE(std::abs(r["results"]["lambda_alpha_I"].get<double>()), 1e-6);
}

TEST(Cli, ExitCodes) {
  auto dir = scratch("codes");
  EXPECT_EQ(run("geometry-check", write_config(dir, R"({"tube": {"lenght": 1}})"), dir / "a"), 2);
  EXPECT_EQ(run("geometry-check", dir / "nope.json", dir / "b"), 2);
  EXPECT_EQ(run("no-such-command", write_config(dir, "{}"), dir / "c"), 2);
  // twisted tube handed to the bending certificate violates its hypothesis
  auto twisted = write_config(dir, R"({"tube": {"half_length": 4, "curve": {"preset": "bump", "peak": 0.5, "width": 2},
      "angle": {"rate": {"kind": "constant", "value": 1}}, "shape": {"kind": "disc", "radius": 0.3}},
      "discretization": {"h_mesh": 0.15, "ds": 0.25}})");
  EXPECT_EQ(run("certify-bending", twisted, dir / "d"), 2);
  // eps growing along the list: the thin-limit defect grows, the check names the inequality
  auto grow = write_config(dir, R"({"tube": {"half_length": 1, "curve": {"preset": "bump", "peak": 1, "width": 1.5},
      "angle": {"preset": "tang"}, "shape": {"kind": "disc"}},
      "discretization": {"h_mesh": 0.25, "ds": 0.1}, "eps_list": [0.1, 0.3]})");
  EXPECT_EQ(run("thin-limit", grow, dir / "e"), 1);
  auto log = read_text(dir / "e.log");
  EXPECT_NE(log.find("|d_j(eps_i)| < |d_j(eps_{i-1})|"), std::string::npos);
  auto r = read_json(dir / "e" / "report.json");
  EXPECT_FALSE(r["passed"].get<bool>());
}

TEST(Cli, RerunFromReportIsBitwiseIdentical) {
  auto dir = scratch("roundtrip");
  auto cfg = write_config(dir, R"({"tube": {"half_length": 3, "shape": {"kind": "ellipse"}},
      "discretization": {"h_mesh": 0.25, "ds": 0.1}, "alpha": {"kind": "plateau"},
      "partition": [[-3, -1], [-1, 1], [1, 3]], "random_vectors": 10})");
  ASSERT_EQ(run("partition-bound", cfg, dir / "first"), 0);
  ASSERT_EQ(run("partition-bound", dir / "first" / "report.json", dir / "second"), 0);
  auto a = read_json(dir / "first" / "report.json"), b = read_json(dir / "second" / "report.json");
  EXPECT_EQ(a["config"].dump(), b["config"].dump());
  EXPECT_EQ(a["results"].dump(), b["results"].dump());
  EXPECT_EQ(read_text(dir / "first" / "parts.csv"), read_text(dir / "second" / "parts.csv"));
}

TEST(Cli, ThreadCountDoesNotChangeResults) {
  auto dir = scratch("threads");
  auto cfg = write_config(dir, R"({"tube": {"half_length": 1, "curve": {"preset": "line"},
      "angle": {"rate": {"kind": "bump", "value": 1, "width": 1.5}}, "shape": {"kind": "ellipse"}},
      "discretization": {"h_mesh": 0.25, "ds": 0.1}, "eps_list": [0.3, 0.2, 0.1], "c_omega": 0.6})");
  int one = run("thin-limit", cfg, dir / "one", 1), two = run("thin-limit", cfg, dir / "two", 2);
  EXPECT_EQ(one, two);
  EXPECT_EQ(read_json(dir / "one" / "report.json")["results"].dump(), read_json(dir / "two" / "report.json")["results"].dump());
}
