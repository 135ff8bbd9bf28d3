#include "smoothdiff/checkpoint.hpp"

#include <map>
#include <string>

#include "smoothdiff/error.hpp"
#include "smoothdiff/io.hpp"

namespace smoothdiff {

namespace {

Tensor vector_tensor(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

const Tensor& lookup(const std::map<std::string, Tensor>& entries, const std::string& name) {
  auto it = entries.find(name);
  if (it == entries.end()) throw Error(ErrorCode::kFormat, "checkpoint is missing entry '" + name + "'");
  return it->second;
}

std::size_t as_extent(double v) { return static_cast<std::size_t>(v); }

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const DenoiserModel& model, const NoiseSchedule& schedule,
                     const AdamState* optimizer) {
  const auto& d = model.dims();
  const std::uint64_t hash = schedule.hash();
  std::vector<NamedTensor> entries;
  entries.push_back({"meta.dims", vector_tensor({static_cast<double>(d.channels), static_cast<double>(d.height),
                                                 static_cast<double>(d.width)})});
  entries.push_back({"meta.widths", vector_tensor({static_cast<double>(d.feature_width),
                                                   static_cast<double>(d.condition_width)})});
  entries.push_back({"meta.timesteps", vector_tensor({static_cast<double>(d.timesteps)})});
  // Split so each half is exactly representable as a double.
  entries.push_back({"meta.schedule_hash", vector_tensor({static_cast<double>(hash >> 32),
                                                          static_cast<double>(hash & 0xffffffffULL)})});
  for (std::size_t i = 0; i < kParamCount; ++i) {
    entries.push_back({std::string(param_name(i)), model.params().tensors[i]});
  }
  if (optimizer) {
    entries.push_back({"adam.step", vector_tensor({static_cast<double>(optimizer->step)})});
    for (std::size_t i = 0; i < kParamCount; ++i) {
      entries.push_back({"adam.m." + std::string(param_name(i)), optimizer->m.tensors[i]});
      entries.push_back({"adam.v." + std::string(param_name(i)), optimizer->v.tensors[i]});
    }
  }
  write_tensor_container(path, entries);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::map<std::string, Tensor> entries;
  for (auto& e : read_tensor_container(path)) entries.emplace(std::move(e.name), std::move(e.tensor));

  const Tensor& dims = lookup(entries, "meta.dims");
  const Tensor& widths = lookup(entries, "meta.widths");
  const Tensor& steps = lookup(entries, "meta.timesteps");
  const Tensor& hash = lookup(entries, "meta.schedule_hash");
  if (dims.size() != 3 || widths.size() != 2 || steps.size() != 1 || hash.size() != 2) {
    throw Error(ErrorCode::kFormat, "malformed checkpoint metadata");
  }
  CheckpointMeta meta;
  meta.dims = DenoiserDims{as_extent(dims[0]), as_extent(dims[1]), as_extent(dims[2]),
                           as_extent(widths[0]), as_extent(widths[1]), static_cast<int>(steps[0])};
  meta.schedule_hash = (static_cast<std::uint64_t>(hash[0]) << 32) | static_cast<std::uint64_t>(hash[1]);

  ParameterSet params;
  for (std::size_t i = 0; i < kParamCount; ++i) params.tensors[i] = lookup(entries, std::string(param_name(i)));

  Checkpoint ckpt{DenoiserModel(meta.dims, params), std::nullopt, meta};
  if (entries.count("adam.step")) {
    AdamState state;
    state.step = static_cast<std::int64_t>(lookup(entries, "adam.step")[0]);
    for (std::size_t i = 0; i < kParamCount; ++i) {
      state.m.tensors[i] = lookup(entries, "adam.m." + std::string(param_name(i)));
      state.v.tensors[i] = lookup(entries, "adam.v." + std::string(param_name(i)));
    }
    ckpt.optimizer = std::move(state);
  }
  return ckpt;
}

void check_compatible(const CheckpointMeta& meta, const DenoiserDims& dims, const NoiseSchedule& schedule) {
  if (meta.dims.timesteps != dims.timesteps) {
    throw Error(ErrorCode::kConfig, "checkpoint was trained with T = " + std::to_string(meta.dims.timesteps) +
                                        ", config has T = " + std::to_string(dims.timesteps));
  }
  if (!(meta.dims == dims)) throw Error(ErrorCode::kConfig, "checkpoint model dims differ from config");
  if (meta.schedule_hash != schedule.hash()) throw Error(ErrorCode::kConfig, "checkpoint schedule differs from config");
}

}  // namespace smoothdiff
