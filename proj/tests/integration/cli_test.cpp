// Drives the installed command-line tool end to end on a small configuration.

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "smoothdiff/io.hpp"
#include "temp_dir.hpp"

namespace fs = std::filesystem;
using smoothdiff::read_file;
using smoothdiff::read_text;
using smoothdiff::write_text;

namespace {

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

const char* kFastConfig = R"({
  "schedule": {"timesteps": 100},
  "model": {"feature_width": 16},
  "train": {"steps": 30, "checkpoint_every": 10},
  "sample": {"num_steps": 5},
  "metric": {"k": 4},
  "data": {"frames": 5}
})";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { write_text(dir_ / "config.json", kFastConfig); }

  CliRun run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(SMOOTHDIFF_CLI) + " --config " + (dir_ / "config.json").string() + " " +
                            args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_text(out);
    r.err = read_text(err);
    return r;
  }

  std::string path(const std::string& leaf) const { return (dir_ / leaf).string(); }

  // gen-data then train into `train_dir`, returning the checkpoint path.
  std::string trained(const std::string& extra = "", const std::string& train_dir = "train") {
    if (!fs::exists(dir_ / "data")) EXPECT_EQ(run("--out " + path("data") + " gen-data").exit_code, 0);
    const CliRun r = run("--out " + path(train_dir) + " " + extra + " train --clip " + path("data"));
    EXPECT_EQ(r.exit_code, 0) << r.err;
    return path(train_dir + "/checkpoint.vtc");
  }

  TempDir dir_;
};

std::vector<nlohmann::json> jsonl(const fs::path& p) {
  std::vector<nlohmann::json> out;
  std::istringstream in(read_text(p));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  if (files.empty()) return false;
  for (const auto& f : files)
    if (!fs::exists(b / f) || read_file(a / f) != read_file(b / f)) return false;
  return true;
}

}  // namespace

TEST_F(Cli, GenDataManifestListsFrames) {
  const CliRun r = run("--out " + path("data") + " gen-data");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto manifest = nlohmann::json::parse(read_text(dir_ / "data/manifest.json"));
  ASSERT_EQ(manifest["frames"].size(), 5u);
  for (const auto& f : manifest["frames"]) EXPECT_TRUE(fs::exists(dir_ / "data/frames" / f.get<std::string>()));
  EXPECT_TRUE(fs::exists(dir_ / "data/clip.vtc"));
}

TEST_F(Cli, GenDataBadSpecFails) {
  const CliRun r = run("--out " + path("data") + " --set data.velocity_x=4 gen-data");
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("leaves the frame"), std::string::npos) << r.err;
}

TEST_F(Cli, GenDataIsByteIdentical) {
  ASSERT_EQ(run("--out " + path("a") + " --seed 3 gen-data").exit_code, 0);
  ASSERT_EQ(run("--out " + path("b") + " --seed 3 gen-data").exit_code, 0);
  EXPECT_TRUE(same_tree(dir_ / "a", dir_ / "b"));
  ASSERT_EQ(run("--out " + path("c") + " --seed 4 gen-data").exit_code, 0);
  EXPECT_NE(read_file(dir_ / "a/clip.vtc"), read_file(dir_ / "c/clip.vtc"));
}

TEST_F(Cli, TrainLogsEveryStepAndVariantsDiffer) {
  trained("--set loss.variant=none", "none");
  trained("--set loss.variant=crossframe", "cross");
  const auto a = jsonl(dir_ / "none/train_log.jsonl");
  const auto b = jsonl(dir_ / "cross/train_log.jsonl");
  ASSERT_EQ(a.size(), 30u);
  ASSERT_EQ(b.size(), 30u);
  EXPECT_EQ(a.back()["iter"], 30);
  EXPECT_EQ(b.back()["iter"], 30);
  EXPECT_NE(read_text(dir_ / "none/train_log.jsonl"), read_text(dir_ / "cross/train_log.jsonl"));
  EXPECT_TRUE(fs::exists(dir_ / "none/checkpoint_000010.vtc"));
}

TEST_F(Cli, ResumeMatchesUninterruptedRun) {
  trained("", "full");
  const CliRun r = run("--out " + path("full2") + " --set train.steps=30 train --clip " + path("data") + " --resume " +
                    path("full/checkpoint_000010.vtc"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(read_file(dir_ / "full/checkpoint.vtc"), read_file(dir_ / "full2/checkpoint.vtc"));
}

TEST_F(Cli, ResumeWithDifferentTFails) {
  const auto ck = trained();
  const CliRun r = run("--out " + path("again") + " --set schedule.timesteps=200 train --clip " + path("data") +
                    " --resume " + ck);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("T = 100"), std::string::npos) << r.err;
}

TEST_F(Cli, SampleMissingPromptListsAvailable) {
  const auto ck = trained();
  const CliRun r = run("--out " + path("s") + " sample --checkpoint " + ck + " --clip " + path("data") +
                    " --prompt 'a purple cow'");
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("square drifting right, glowing"), std::string::npos) << r.err;
}

TEST_F(Cli, SampleIsByteIdenticalAndConstraintChangesDiagnostics) {
  const auto ck = trained();
  const std::string base = " sample --checkpoint " + ck + " --clip " + path("data");
  ASSERT_EQ(run("--out " + path("s1") + base).exit_code, 0);
  ASSERT_EQ(run("--out " + path("s2") + base).exit_code, 0);
  EXPECT_TRUE(same_tree(dir_ / "s1/frames", dir_ / "s2/frames"));
  EXPECT_EQ(read_file(dir_ / "s1/diagnostics.jsonl"), read_file(dir_ / "s2/diagnostics.jsonl"));
  ASSERT_EQ(run("--out " + path("s3") + " --set sample.constraint.enabled=true" + base).exit_code, 0);
  EXPECT_NE(read_file(dir_ / "s1/diagnostics.jsonl"), read_file(dir_ / "s3/diagnostics.jsonl"));
  EXPECT_EQ(jsonl(dir_ / "s1/diagnostics.jsonl").size(), 5u);
}

TEST_F(Cli, EvalConstantClipAndShuffle) {
  ASSERT_EQ(run("--out " + path("flat") + " --set data.velocity_x=0 --set data.texture=0 gen-data").exit_code, 0);
  CliRun r = run("eval " + path("flat"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  auto report = nlohmann::json::parse(r.out);
  EXPECT_NEAR(report["vl_score"].get<double>(), 100.0, 1e-9);
  EXPECT_NEAR(report["mean_pairwise_consistency"].get<double>(), 100.0, 1e-9);

  ASSERT_EQ(run("--out " + path("data") + " gen-data").exit_code, 0);
  r = run("eval " + path("data/frames"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto ordered = nlohmann::json::parse(r.out);
  ASSERT_EQ(ordered["pairs"].size(), 4u);
  EXPECT_TRUE(ordered["pairs"][0].contains("offset"));

  // Renaming the files reorders the clip: 0 2 4 1 3.
  fs::create_directories(dir_ / "shuffled");
  const int order[] = {0, 2, 4, 1, 3};
  for (int i = 0; i < 5; ++i) {
    char src[32], dst[32];
    std::snprintf(src, sizeof src, "frame_%04d.pgm", order[i]);
    std::snprintf(dst, sizeof dst, "frame_%04d.pgm", i);
    fs::copy_file(dir_ / "data/frames" / src, dir_ / "shuffled" / dst);
  }
  r = run("eval " + path("shuffled"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto shuffled = nlohmann::json::parse(r.out);
  EXPECT_NEAR(shuffled["mean_pairwise_consistency"].get<double>(), ordered["mean_pairwise_consistency"].get<double>(),
              1e-9);
  EXPECT_LT(shuffled["vl_score"].get<double>(), ordered["vl_score"].get<double>());
}

TEST_F(Cli, AnalyzeResidualsAndSigns) {
  const auto ck = trained();
  CliRun r = run("analyze --checkpoint " + ck + " --clip " + path("data") + " --t 1,25,50,75,100");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto report = nlohmann::json::parse(r.out);
  ASSERT_EQ(report["rows"].size(), 5u);
  for (const auto& row : report["rows"]) {
    EXPECT_LE(row["max_residual"].get<double>(), 1e-9);
    EXPECT_LT(row["c"].get<double>(), 0.0);
  }
  r = run("analyze --checkpoint " + ck + " --clip " + path("data") + " --t 0");
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("timestep 0"), std::string::npos) << r.err;
}

TEST_F(Cli, ReportTableAndSeries) {
  const auto ck = trained();
  const std::string base = " sample --checkpoint " + ck + " --clip " + path("data");
  ASSERT_EQ(run("--out " + path("r1") + base).exit_code, 0);
  ASSERT_EQ(run("--out " + path("r2") + " --set sample.constraint.enabled=true" + base).exit_code, 0);
  CliRun r = run("--out " + path("rep") + " report " + path("r1") + " " + path("r2"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("VL"), std::string::npos);
  EXPECT_NE(r.out.find("pairwise"), std::string::npos);
  EXPECT_NE(r.out.find("r1"), std::string::npos);
  std::istringstream series(read_text(dir_ / "rep/series.csv"));
  int rows = 0;
  for (std::string line; std::getline(series, line);) rows += !line.empty();
  EXPECT_EQ(rows, 3);  // header plus one row per run

  fs::create_directories(dir_ / "empty_run");
  r = run("report " + path("r1") + " " + path("empty_run"));
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("empty_run"), std::string::npos) << r.err;
}

TEST_F(Cli, UsageErrors) {
  EXPECT_NE(run("").exit_code, 0);
  EXPECT_NE(run("frobnicate").exit_code, 0);
  EXPECT_NE(run("--set nonsense gen-data").exit_code, 0);
}
