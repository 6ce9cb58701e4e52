#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "rtfdoa/pipeline.hpp"
#include "rtfdoa/wav.hpp"

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(RTFDOA_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "rtfdoa_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "scene.json") << R"({"seed": 5, "duration_s": 6, "trajectory": [[0, -35]], "snr_db": 5})";
    ASSERT_EQ(cli("simulate " + (dir_ / "scene.json").string() + " -o " + (dir_ / "sim").string()), 0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static fs::path sim(const char* f) { return dir_ / "sim" / f; }
  static std::string estimate_args(const std::string& out) {
    return "estimate --mixed " + sim("mixed.wav").string() + " --labels " + sim("labels.bin").string() + " --truth " +
           sim("truth.csv").string() + " -o " + (dir_ / out).string();
  }

  static inline fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateWritesEverything) {
  for (const char* f : {"mixed.wav", "clean.wav", "noise.wav", "truth.csv", "labels.bin", "scene.json"})
    EXPECT_TRUE(fs::exists(sim(f))) << f;
  const auto mixed = rtfdoa::read_wav(sim("mixed.wav"));
  EXPECT_EQ(mixed.channels(), 5u);
  EXPECT_EQ(mixed.length(), 96000u);
  EXPECT_EQ(read_json(sim("scene.json"))["seed"], 5);
}

TEST_F(Cli, EstimateAndEvaluate) {
  ASSERT_EQ(cli(estimate_args("est") + " --estimator sc --detector oracle --cost-surface"), 0);
  for (const char* f : {"doa.csv", "config.json", "timing.json", "metrics.json", "cost_surface.csv"})
    EXPECT_TRUE(fs::exists(dir_ / "est" / f)) << f;
  const auto metrics = read_json(dir_ / "est" / "metrics.json");
  EXPECT_GE(metrics["accuracy_pct"].get<double>(), 90.0);
  const auto config = read_json(dir_ / "est" / "config.json");
  EXPECT_EQ(config["estimator"], "sc");
  EXPECT_EQ(config["detector"], "oracle");

  ASSERT_EQ(cli("evaluate --doa " + (dir_ / "est" / "doa.csv").string() + " --truth " + sim("truth.csv").string() +
                " --scenario auto -o " + (dir_ / "eval.json").string()),
            0);
  const auto eval = read_json(dir_ / "eval.json");
  EXPECT_EQ(eval["scenario"], "static");
  EXPECT_EQ(eval["accuracy_pct"], metrics["accuracy_pct"]);
}

TEST_F(Cli, FlagsOverrideConfigFile) {
  std::ofstream(dir_ / "run.json") << R"({"estimator": "cs-head", "tau_y_s": 0.3, "detector": "oracle"})";
  ASSERT_EQ(cli(estimate_args("prec") + " --config " + (dir_ / "run.json").string() + " --estimator cw-head"), 0);
  const auto config = read_json(dir_ / "prec" / "config.json");
  EXPECT_EQ(config["estimator"], "cw-head");
  EXPECT_EQ(config["tau_y_s"], 0.3);
  EXPECT_EQ(config["tau_n_s"], 0.5);
}

TEST_F(Cli, OutputsAreDeterministic) {
  ASSERT_EQ(cli(estimate_args("det1") + " --estimator cw-ext --detector oracle"), 0);
  ASSERT_EQ(cli(estimate_args("det2") + " --estimator cw-ext --detector oracle"), 0);
  EXPECT_EQ(slurp(dir_ / "det1" / "doa.csv"), slurp(dir_ / "det2" / "doa.csv"));
  EXPECT_EQ(slurp(dir_ / "det1" / "metrics.json"), slurp(dir_ / "det2" / "metrics.json"));
}

TEST_F(Cli, PrototypesRoundTrip) {
  const auto db = dir_ / "db.bin";
  ASSERT_EQ(cli("prototypes --step 10 -o " + db.string()), 0);
  EXPECT_EQ(rtfdoa::load_prototypes(db).directions.size(), 36u);
  ASSERT_EQ(cli(estimate_args("withdb") + " --db " + db.string() + " --estimator sc --detector oracle"), 0);
}

TEST_F(Cli, ConfigurationErrorsExitTwo) {
  EXPECT_EQ(cli(estimate_args("bad") + " --estimator mvdr"), 2);
  EXPECT_EQ(cli(estimate_args("bad") + " --tau-y -1"), 2);
  EXPECT_EQ(cli("estimate --mixed /nonexistent.wav"), 2);
  EXPECT_EQ(cli(estimate_args("bad") + " --detector oracle --labels /nonexistent.bin"), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("simulate"), 2);
  std::ofstream(dir_ / "noseed.json") << R"({"duration_s": 3})";
  EXPECT_EQ(cli("simulate " + (dir_ / "noseed.json").string() + " -o " + (dir_ / "x").string()), 2);

  // A head-only recording cannot feed the external-microphone estimators.
  auto clip = rtfdoa::read_wav(sim("mixed.wav"));
  clip.samples.pop_back();
  rtfdoa::write_wav(dir_ / "head.wav", clip, rtfdoa::WavSampleFormat::Float32);
  EXPECT_EQ(cli("estimate --mixed " + (dir_ / "head.wav").string() + " --estimator sc -o " + (dir_ / "h").string()), 2);
  EXPECT_EQ(cli("estimate --mixed " + (dir_ / "head.wav").string() + " --estimator cw-head -o " + (dir_ / "h").string()), 0);
}

TEST_F(Cli, SilentInputExitsThree) {
  rtfdoa::AudioClip silent;
  silent.samples.assign(5, std::vector<double>(16000 * 3, 0.0));
  rtfdoa::write_wav(dir_ / "silent.wav", silent, rtfdoa::WavSampleFormat::Float32);
  EXPECT_EQ(cli("estimate --mixed " + (dir_ / "silent.wav").string() + " -o " + (dir_ / "s").string()), 3);
}

TEST_F(Cli, SweepWritesTables) {
  std::ofstream(dir_ / "matrix.json") << R"({"scene": {"duration_s": 4}, "snr_db": [0, 10],
      "estimators": ["sc", "cs-head"], "source_azimuths_deg": [35], "run": {"detector": "oracle"}})";
  ASSERT_EQ(cli("sweep " + (dir_ / "matrix.json").string() + " -q -o " + (dir_ / "sw").string()), 0);
  for (const char* f : {"results.csv", "summary.csv", "plot.csv"}) EXPECT_TRUE(fs::exists(dir_ / "sw" / f)) << f;
  std::ifstream in(dir_ / "sw" / "results.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 5u);
}
