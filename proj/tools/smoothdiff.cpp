#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "smoothdiff/error.hpp"
#include "smoothdiff/io.hpp"
#include "smoothdiff/pipeline.hpp"

namespace fs = std::filesystem;
using namespace smoothdiff;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

ExperimentConfig load(const Globals& g) {
  return g.config.empty() ? parse_config("", g.overrides) : load_config(g.config, g.overrides);
}

fs::path require_out(const Globals& g, const char* command) {
  if (g.out.empty()) throw Error(ErrorCode::kConfig, std::string(command) + " needs --out");
  return g.out;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("smoothdiff");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("SMOOTHDIFF_LOG")) spdlog::cfg::helpers::load_levels(level);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"smoothdiff: desk-scale video diffusion with temporal noise constraints"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "overrides the seed used by the command");
  app.add_option("--out", g.out, "output directory (or file for eval/analyze)");
  app.add_option("--set", g.overrides, "override a config key, dotted.path=value")->allow_extra_args(false);

  auto* gen = app.add_subcommand("gen-data", "render the synthetic source clip");

  auto* train = app.add_subcommand("train", "one-shot tune the denoiser on a clip");
  std::string clip;
  std::string resume;
  train->add_option("--clip", clip, "clip directory or .vtc file")->required();
  train->add_option("--resume", resume, "checkpoint to continue from")->check(CLI::ExistingFile);

  auto* samp = app.add_subcommand("sample", "generate a clip from a checkpoint");
  std::string checkpoint;
  std::string prompt;
  samp->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  samp->add_option("--prompt", prompt, "prompt name; defaults to prompts.target");
  samp->add_option("--clip", clip, "source clip for inversion init");

  auto* eval = app.add_subcommand("eval", "score a clip");
  std::string input;
  eval->add_option("input,--input", input, "frames directory, run directory or .vtc clip")->required();

  auto* analyze = app.add_subcommand("analyze", "adjacent-difference residuals and the C table");
  std::vector<int> timesteps{1, 250, 500, 750, 1000};
  analyze->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  analyze->add_option("--clip", clip)->required();
  analyze->add_option("--t", timesteps, "timesteps to analyze")->delimiter(',');

  auto* report = app.add_subcommand("report", "compare sampled runs");
  std::vector<std::string> runs;
  report->add_option("runs", runs, "run directories from `sample`")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = load(g);
    if (*gen) {
      if (g.seed) cfg.data_seed = *g.seed;
      const fs::path out = require_out(g, "gen-data");
      const auto result = run_gen_data(cfg, out);
      spdlog::info("wrote {} frames to {}", result.frame_files.size(), out.string());
    } else if (*train) {
      if (g.seed) cfg.train.seed = *g.seed;
      const fs::path out = require_out(g, "train");
      std::optional<fs::path> from;
      if (!resume.empty()) from = resume;
      const auto result = run_train(cfg, clip, out, from);
      spdlog::info("trained to step {} (l_org {:.6f}, total {:.6f})", result.final_step, result.last.l_org,
                   result.last.total);
    } else if (*samp) {
      if (g.seed) cfg.sample.seed = *g.seed;
      const fs::path out = require_out(g, "sample");
      std::optional<fs::path> source;
      if (!clip.empty()) source = clip;
      const auto result = run_sample(cfg, checkpoint, prompt.empty() ? cfg.prompts.target : prompt, source, out);
      spdlog::info("sampled {} frames in {} steps to {}", result.clip.frame_count(), result.diagnostics.size(),
                   out.string());
    } else if (*eval) {
      const std::string text = run_eval(cfg, input).to_json();
      if (!g.out.empty()) write_text(g.out, text);
      std::cout << text;
    } else if (*analyze) {
      if (g.seed) cfg.sample.seed = *g.seed;
      const std::string text = run_analyze(cfg, checkpoint, clip, timesteps).to_json();
      if (!g.out.empty()) write_text(g.out, text);
      std::cout << text;
    } else if (*report) {
      std::vector<fs::path> dirs(runs.begin(), runs.end());
      const auto result = run_report(cfg, dirs);
      if (!g.out.empty()) {
        fs::create_directories(g.out);
        write_text(fs::path(g.out) / "report.txt", result.table());
        write_text(fs::path(g.out) / "series.csv", result.series_csv());
      }
      std::cout << result.table();
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
  return 0;
}
