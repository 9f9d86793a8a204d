#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(MBST_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "mbst_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "spec.json") << R"({"name": "mini", "width": 160, "height": 120,
      "init_box": [60, 40, 30, 30], "motion": [{"vx": 1.0, "vy": 0.5}],
      "phases": [{"regime": "occluded_band", "frames": 8}], "seed": 3})";
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("eval"), 2);
  EXPECT_EQ(run("synth-gen " + path("out") + " --preset nope"), 2);
  EXPECT_EQ(run("eval " + path("missing")), 2);
  EXPECT_EQ(run("eval " + path(".") + " --format xml"), 2);
}

TEST_F(Cli, SynthTrackEval) {
  ASSERT_EQ(run("synth-gen " + path("data") + " --spec " + path("spec.json")), 0);
  ASSERT_TRUE(fs::exists(dir_ / "data" / "mini" / "groundtruth_rect.txt"));

  ASSERT_EQ(run("track " + path("data/mini") + " -o " + path("t.csv") + " --branches intensity,color_hist"), 0);
  const std::string csv = slurp(dir_ / "t.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "frame,x,y,w,h,active_branch");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);

  ASSERT_EQ(run("eval " + path("data") + " -o " + path("r1.json") + " --jobs 1 --interval 3"), 0);
  ASSERT_EQ(run("eval " + path("data") + " -o " + path("r2.json") + " --jobs 2 --interval 3"), 0);
  EXPECT_EQ(slurp(dir_ / "r1.json"), slurp(dir_ / "r2.json"));
  const auto j = nlohmann::json::parse(slurp(dir_ / "r1.json"));
  EXPECT_EQ(j["config"]["selection_interval"], 3);
  EXPECT_EQ(j["sequences"].size(), 1u);

  EXPECT_EQ(run("eval " + path("data") + " --format csv -o " + path("r.csv")), 0);
  EXPECT_EQ(run("eval " + path("data") + " --format svg -o " + path("r.svg")), 0);
  EXPECT_NE(slurp(dir_ / "r.svg").find("<svg"), std::string::npos);
}

TEST_F(Cli, BadConfigIsUsageError) {
  ASSERT_EQ(run("synth-gen " + path("data") + " --spec " + path("spec.json")), 0);
  EXPECT_EQ(run("track " + path("data/mini") + " --branches sift"), 2);
  EXPECT_EQ(run("track " + path("data/mini") + " --interval 0"), 2);
}
