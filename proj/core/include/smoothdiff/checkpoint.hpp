#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "smoothdiff/denoiser.hpp"
#include "smoothdiff/trainer.hpp"

namespace smoothdiff {

struct CheckpointMeta {
  DenoiserDims dims;
  std::uint64_t schedule_hash = 0;
};

struct Checkpoint {
  DenoiserModel model;
  std::optional<AdamState> optimizer;
  CheckpointMeta meta;
};

// One container entry per parameter tensor, "meta.*" entries for the model
// dims and schedule hash, and "adam.*" entries when optimizer state is given.
void save_checkpoint(const std::filesystem::path& path, const DenoiserModel& model, const NoiseSchedule& schedule,
                     const AdamState* optimizer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws kConfig when the checkpoint was produced for other dims or another schedule.
void check_compatible(const CheckpointMeta& meta, const DenoiserDims& dims, const NoiseSchedule& schedule);

}  // namespace smoothdiff
