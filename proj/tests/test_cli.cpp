#include <gtest/gtest.h>

#include <sys/wait.h>

#include "support.hpp"

using cforge::testing::TempDir;

namespace {

struct Result {
  int code = -1;
  std::string err;
};

Result run(const std::string& args, const TempDir& dir) {
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(CFORGE_CLI) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = cforge::testing::slurp(err);
  return r;
}

const char* kSmall = R"({"camera": {"width": 96, "height": 72}, "atlas": {"width": 512, "height": 256}})";

}  // namespace

TEST(Cli, NoSubcommandPrintsUsage) {
  TempDir dir("cli");
  const Result r = run("", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Usage"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrors) {
  TempDir dir("cli");
  EXPECT_EQ(run("frobnicate", dir).code, 2);
  EXPECT_EQ(run("generate --jobs 0", dir).code, 2);
  EXPECT_EQ(run("generate --config /nonexistent.json", dir).code, 2);
  EXPECT_EQ(run("validate " + (dir / "missing").string(), dir).code, 2);
}

TEST(Cli, ConfigErrorIsOneLine) {
  TempDir dir("cli");
  cforge::testing::spit(dir / "bad.json", R"({"p_dmg": 0.4})");
  const Result r = run("generate --config " + (dir / "bad.json").string() + " --out " + (dir / "ds").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("p_damage"), std::string::npos) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
}

TEST(Cli, GenerateValidateStats) {
  TempDir dir("cli");
  cforge::testing::spit(dir / "c.json", kSmall);
  const std::string ds = (dir / "ds").string();
  EXPECT_EQ(run("generate --config " + (dir / "c.json").string() + " --seed 7 --scenes 2 --jobs 2 --quiet --out " + ds, dir).code, 0);
  EXPECT_EQ(run("validate " + ds, dir).code, 0);
  EXPECT_EQ(run("stats " + ds, dir).code, 0);
  EXPECT_EQ(run("stats --json " + ds, dir).code, 0);
  const auto m = cforge::read_manifest(dir / "ds/manifest.json");
  EXPECT_EQ(m.overrides.at("seed"), 7);
  EXPECT_EQ(m.overrides.at("scene_count"), 2);
  EXPECT_EQ(m.config.at("seed"), 7);

  std::filesystem::remove(dir / "ds" / m.images.at(0).seg_file);
  const Result bad = run("validate --quiet " + ds, dir);
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("seg_png"), std::string::npos) << bad.err;
}
