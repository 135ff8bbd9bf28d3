#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "smoothdiff/data.hpp"
#include "smoothdiff/metrics.hpp"
#include "smoothdiff/sampler.hpp"
#include "smoothdiff/trainer.hpp"

namespace smoothdiff {

struct ScheduleConfig {
  int timesteps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
};

struct ModelConfig {
  std::size_t feature_width = 128;
  std::size_t condition_width = 16;
  std::uint64_t seed = 0;
};

struct PromptConfig {
  std::vector<std::string> names = {"square drifting right", "square drifting right, glowing"};
  std::string source = "square drifting right";
  std::string target = "square drifting right, glowing";
  std::uint64_t seed = 0;
};

// One document drives every command. JSON with the sections
// schedule, model, train, loss, sample, metric, data, prompts and seeds;
// absent keys take the defaults below, unknown keys are rejected.
struct ExperimentConfig {
  ScheduleConfig schedule;
  ModelConfig model;
  TrainConfig train;  // the "loss" section fills train.variant / train.constraint
  SamplerConfig sample;
  VLScoreConfig metric;
  SceneSpec data;
  std::uint64_t data_seed = 0;
  PromptConfig prompts;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};

  NoiseSchedule build_schedule() const;
  DenoiserDims model_dims() const;
  PromptTable prompt_table() const;
};

// Parses a config document. Each override is "dotted.path=value" where value
// is JSON if it parses as such, otherwise a bare string.
ExperimentConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Full document with every key spelled out; parse_config(to_json(c)) == c.
std::string to_json(const ExperimentConfig& cfg);

}  // namespace smoothdiff
