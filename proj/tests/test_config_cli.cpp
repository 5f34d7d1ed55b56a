#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cobot/config.hpp"
#include "cobot/errors.hpp"
#include "cobot/scenario.hpp"

using namespace cobot;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cobot_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Runs the CLI, returns its exit status; stdout goes to `out_file` when given.
int cli(const std::string& args, const fs::path& out_file = "/dev/null") {
  const std::string cmd = std::string("\"") + COBOT_SIM_PATH + "\" " + args + " > \"" + out_file.string() +
                          "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string configPath(const char* name) { return std::string(COBOT_CONFIG_DIR) + "/" + name; }

}  // namespace

TEST(Config, DumpParseRoundTrip) {
  SessionConfig cfg;
  cfg.name = "tweaked";
  cfg.session.scheme = ControlScheme::Cardinal;
  cfg.session.seed = 1234567;
  cfg.feedback.horizon = 0.75;
  cfg.scene.target.center = {0.35, 0.25};
  const std::string text = dumpConfig(cfg);
  const SessionConfig back = parseConfig(text);
  EXPECT_EQ(dumpConfig(back), text);
  EXPECT_EQ(back.name, "tweaked");
  EXPECT_EQ(back.session.scheme, ControlScheme::Cardinal);
  EXPECT_EQ(back.session.seed, 1234567u);
  EXPECT_EQ(back.feedback.horizon, 0.75);
}

TEST(Config, PartialFileKeepsDefaults) {
  const SessionConfig cfg = parseConfig(R"({"schema_version":1,"name":"tiny"})");
  EXPECT_EQ(cfg.name, "tiny");
  EXPECT_EQ(dumpConfig(cfg), [] {
    SessionConfig d;
    d.name = "tiny";
    return dumpConfig(d);
  }());
}

TEST(Config, Rejections) {
  EXPECT_THROW(parseConfig(R"({"schema_version":1,"bogus":1})"), ConfigError);
  EXPECT_THROW(parseConfig(R"({"schema_version":2})"), ConfigError);
  EXPECT_THROW(parseConfig(R"({"schema_version":1,"name":5})"), ConfigError);
  EXPECT_THROW(parseConfig("not json"), ConfigError);
  EXPECT_THROW(loadConfig("/nonexistent/cfg.json"), ConfigError);
}

TEST(Config, ShippedFilesLoad) {
  for (const char* name : {"default.json", "cardinal.json", "unreachable.json"}) {
    EXPECT_NO_THROW(loadConfig(configPath(name))) << name;
  }
  EXPECT_EQ(dumpConfig(loadConfig(configPath("default.json"))), dumpConfig(SessionConfig{}));
}

TEST(Cli, CheckExitCodes) {
  TempDir tmp;
  EXPECT_EQ(cli("check --config " + configPath("default.json")), kExitOk);
  EXPECT_EQ(cli("check --config " + configPath("unreachable.json")), kExitUnreachable);
  std::ofstream(tmp.path / "bad.json") << R"({"schema_version":1,"bogus":true})";
  EXPECT_EQ(cli("check --config " + (tmp.path / "bad.json").string()), kExitConfig);
  EXPECT_EQ(cli("check --config " + (tmp.path / "missing.json").string()), kExitConfig);
  EXPECT_NE(cli("frobnicate"), kExitOk);
}

TEST(Cli, ScriptWritesLogAndReport) {
  TempDir tmp;
  const auto log = tmp.path / "auto.cobotlog";
  ASSERT_EQ(cli("script --autonomy --out " + log.string()), kExitOk);
  ASSERT_TRUE(fs::exists(log));
  const auto report = fs::path(reportPathFor(log.string()));
  ASSERT_TRUE(fs::exists(report));
  const auto j = slurp(report);
  EXPECT_NE(j.find("\"success\": true"), std::string::npos) << j;
  EXPECT_NE(j.find("\"scheme\": \"autonomy\""), std::string::npos) << j;

  // metrics recomputes the same report from the log alone
  const auto metrics_out = tmp.path / "metrics.json";
  ASSERT_EQ(cli("metrics " + log.string(), metrics_out), kExitOk);
  EXPECT_EQ(slurp(metrics_out), j);
}

TEST(Cli, ScriptIsDeterministicAndReplayable) {
  TempDir tmp;
  const auto a = tmp.path / "a.cobotlog";
  const auto b = tmp.path / "b.cobotlog";
  const auto c = tmp.path / "c.cobotlog";
  ASSERT_EQ(cli("script --scheme cardinal --out " + a.string()), kExitOk);
  ASSERT_EQ(cli("script --scheme cardinal --out " + b.string()), kExitOk);
  EXPECT_EQ(slurp(a), slurp(b));
  ASSERT_EQ(cli("script --scheme cardinal --inputs " + a.string() + " --out " + c.string()), kExitOk);
  EXPECT_EQ(slurp(a), slurp(c));

  // replay to stdout reproduces the file
  const auto replayed = tmp.path / "replayed.txt";
  ASSERT_EQ(cli("replay " + a.string() + " --speed 0", replayed), kExitOk);
  EXPECT_EQ(slurp(replayed), slurp(a));
}

TEST(Cli, FlagValidation) {
  TempDir tmp;
  const auto out = (tmp.path / "x.cobotlog").string();
  EXPECT_NE(cli("script --scheme sideways --out " + out), kExitOk);
  EXPECT_NE(cli("script --feedback loud --out " + out), kExitOk);
  EXPECT_EQ(cli("script --config " + configPath("unreachable.json") + " --out " + out), kExitUnreachable);
  EXPECT_EQ(cli("metrics " + (tmp.path / "missing.cobotlog").string()), kExitFailed);
}
