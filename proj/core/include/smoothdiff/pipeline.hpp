#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "smoothdiff/config.hpp"

namespace smoothdiff {

namespace fs = std::filesystem;

// Clips on disk are a tensor container with one [F, C, H, W] entry "latents".
void save_clip(const fs::path& path, const LatentVideo& clip);
LatentVideo load_clip(const fs::path& path);

// Accepts a .vtc file, a directory holding clip.vtc, a directory holding a
// frames/ subdirectory, or a directory of PGM/PPM frames.
LatentVideo load_clip_any(const fs::path& path);

std::string train_record_json(const TrainLogRecord& rec);
std::string diagnostics_json(const StepDiagnostics& diag);
std::vector<StepDiagnostics> read_diagnostics(const fs::path& path);

struct GenDataOutput {
  std::vector<std::string> frame_files;
};
// out/frames/*.pgm|ppm, out/clip.vtc, out/manifest.json, out/prompts.json
GenDataOutput run_gen_data(const ExperimentConfig& cfg, const fs::path& out);

struct TrainOutput {
  int final_step = 0;
  TrainLogRecord last;
};
// out/checkpoint.vtc, out/train_log.jsonl, out/config.json. With `resume`,
// the checkpoint's optimizer state continues the run up to train.steps.
TrainOutput run_train(const ExperimentConfig& cfg, const fs::path& clip_dir, const fs::path& out,
                      const std::optional<fs::path>& resume = std::nullopt);

// out/frames/, out/clip.vtc, out/diagnostics.jsonl, out/config.json.
// Inversion init reads the source clip from `clip_dir`.
SampleResult run_sample(const ExperimentConfig& cfg, const fs::path& checkpoint, const std::string& prompt,
                        const std::optional<fs::path>& clip_dir, const fs::path& out);

struct EvalReport {
  ClipEvaluation eval;
  std::size_t frames = 0;
  std::string to_json() const;
};
EvalReport run_eval(const ExperimentConfig& cfg, const fs::path& input);

struct AnalyzeRow {
  int t = 0;
  double c = 0.0;
  double alpha_bar_ratio = 0.0;  // sqrt(ab_{t-1} / ab_t)
  double max_residual = 0.0;
};
struct AnalyzeReport {
  std::vector<AnalyzeRow> rows;
  std::string to_json() const;
};
// For each t: noise the clip to x_t, predict eps with the checkpoint, step to
// t - 1 with sigma = 0 and measure the adjacent-difference residual.
AnalyzeReport run_analyze(const ExperimentConfig& cfg, const fs::path& checkpoint, const fs::path& clip_dir,
                          const std::vector<int>& timesteps);

struct RunSummary {
  std::string run;
  double vl_score = 0.0;
  double pairwise = 0.0;
  double mean_d_eps = 0.0;
  double mean_d_x = 0.0;
};
struct ComparisonReport {
  std::vector<RunSummary> runs;
  std::string table() const;
  std::string series_csv() const;
};
// Evaluates each run directory (clip.vtc + diagnostics.jsonl) concurrently.
ComparisonReport run_report(const ExperimentConfig& cfg, const std::vector<fs::path>& run_dirs);

}  // namespace smoothdiff
