#include "smoothdiff/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smoothdiff/checkpoint.hpp"
#include "smoothdiff/error.hpp"
#include "smoothdiff/io.hpp"

namespace smoothdiff {

using json = nlohmann::ordered_json;

namespace {

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  write_text(path, text);
}

}  // namespace

void save_clip(const fs::path& path, const LatentVideo& clip) {
  const auto& fd = clip.frame_dims();
  Extents dims{clip.frame_count()};
  dims.insert(dims.end(), fd.begin(), fd.end());
  std::vector<double> data;
  data.reserve(element_count(dims));
  for (const auto& f : clip.frames()) data.insert(data.end(), f.values().begin(), f.values().end());
  write_tensor_container(path, {NamedTensor{"latents", Tensor(dims, std::move(data))}});
}

LatentVideo load_clip(const fs::path& path) {
  for (auto& e : read_tensor_container(path)) {
    if (e.name != "latents") continue;
    const auto& dims = e.tensor.dims();
    if (dims.size() != 4 || dims[0] == 0) throw Error(ErrorCode::kFormat, path.string() + ": latents must be [F, C, H, W]");
    const Extents frame_dims(dims.begin() + 1, dims.end());
    const std::size_t n = element_count(frame_dims);
    std::vector<Tensor> frames;
    for (std::size_t f = 0; f < dims[0]; ++f) {
      auto begin = e.tensor.values().begin() + static_cast<std::ptrdiff_t>(f * n);
      frames.emplace_back(frame_dims, std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(n)));
    }
    return LatentVideo(std::move(frames));
  }
  throw Error(ErrorCode::kFormat, path.string() + " has no 'latents' entry");
}

LatentVideo load_clip_any(const fs::path& path) {
  if (fs::is_regular_file(path)) return load_clip(path);
  if (fs::is_regular_file(path / "clip.vtc")) return load_clip(path / "clip.vtc");
  const fs::path frames_dir = fs::is_directory(path / "frames") ? path / "frames" : path;
  auto images = read_frames(frames_dir);
  if (images.empty()) throw Error(ErrorCode::kIo, "no clip found under " + path.string());
  return encode_images(images);
}

std::string train_record_json(const TrainLogRecord& rec) {
  json j = {{"iter", rec.iter},     {"t", rec.t},         {"l_org", rec.l_org},
            {"l_noise", rec.l_noise}, {"total", rec.total}, {"null_condition", rec.null_condition}};
  return j.dump();
}

std::string diagnostics_json(const StepDiagnostics& d) {
  json j = {{"step", d.step},
            {"t", d.t},
            {"t_prev", d.t_prev},
            {"mean_d_eps", d.mean_d_eps},
            {"mean_d_eps_raw", d.mean_d_eps_raw},
            {"mean_d_x", d.mean_d_x},
            {"constrained", d.constrained}};
  return j.dump();
}

std::vector<StepDiagnostics> read_diagnostics(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<StepDiagnostics> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      StepDiagnostics d;
      d.step = j.at("step").get<int>();
      d.t = j.at("t").get<int>();
      d.t_prev = j.at("t_prev").get<int>();
      d.mean_d_eps = j.at("mean_d_eps").get<double>();
      d.mean_d_eps_raw = j.at("mean_d_eps_raw").get<double>();
      d.mean_d_x = j.at("mean_d_x").get<double>();
      d.constrained = j.at("constrained").get<bool>();
      out.push_back(d);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
    }
  }
  return out;
}

GenDataOutput run_gen_data(const ExperimentConfig& cfg, const fs::path& out) {
  const Clip clip = generate_clip(cfg.data, SeededRng(cfg.data_seed, 0x64617461ULL));
  fs::create_directories(out);
  GenDataOutput result;
  result.frame_files = write_frames(out / "frames", clip.images);
  save_clip(out / "clip.vtc", clip.latents);
  write_text(out / "prompts.json", cfg.prompt_table().to_json());

  json manifest;
  manifest["seed"] = cfg.data_seed;
  manifest["frame_count"] = clip.images.size();
  manifest["frames"] = result.frame_files;
  manifest["clip"] = "clip.vtc";
  manifest["spec"] = json::parse(to_json(cfg))["data"];
  manifest["source_prompt"] = cfg.prompts.source;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

TrainOutput run_train(const ExperimentConfig& cfg, const fs::path& clip_dir, const fs::path& out,
                      const std::optional<fs::path>& resume) {
  const NoiseSchedule schedule = cfg.build_schedule();
  const DenoiserDims dims = cfg.model_dims();
  const LatentVideo clip = load_clip_any(clip_dir);
  if (clip.frame_dims() != dims.frame_extents()) {
    throw Error(ErrorCode::kConfig, "clip extents do not match the config's data section");
  }
  const Condition cond = cfg.prompt_table().at(cfg.prompts.source);

  std::optional<AdamState> state;
  std::optional<DenoiserModel> model;
  if (resume) {
    Checkpoint ckpt = load_checkpoint(*resume);
    check_compatible(ckpt.meta, dims, schedule);
    if (!ckpt.optimizer) throw Error(ErrorCode::kConfig, "checkpoint has no optimizer state to resume from");
    model = std::move(ckpt.model);
    state = std::move(ckpt.optimizer);
  } else {
    SeededRng rng(cfg.model.seed, 0x6d6f64656cULL);
    model = init_model(rng, dims);
  }

  fs::create_directories(out);
  write_text(out / "config.json", to_json(cfg));
  std::vector<std::string> lines;
  if (resume && fs::exists(out / "train_log.jsonl")) {
    // Keep the records up to the resume point so the log covers the whole run.
    std::istringstream in(read_text(out / "train_log.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && json::parse(line).at("iter").get<std::int64_t>() <= state->step) lines.push_back(line);
    }
  }

  TrainHooks hooks;
  hooks.on_record = [&](const TrainLogRecord& rec) { lines.push_back(train_record_json(rec)); };
  hooks.on_checkpoint = [&](const DenoiserModel& m, const AdamState& s, int iter) {
    std::ostringstream name;
    name << "checkpoint_" << std::setw(6) << std::setfill('0') << iter << ".vtc";
    save_checkpoint(out / name.str(), m, schedule, &s);
    write_lines(out / "train_log.jsonl", lines);
  };

  TrainResult result = train_one_shot(std::move(*model), clip, cond, schedule, cfg.train, hooks, std::move(state));
  save_checkpoint(out / "checkpoint.vtc", result.model, schedule, &result.optimizer);
  write_lines(out / "train_log.jsonl", lines);

  TrainOutput summary;
  summary.final_step = static_cast<int>(result.optimizer.step);
  if (!result.log.empty()) summary.last = result.log.back();
  return summary;
}

SampleResult run_sample(const ExperimentConfig& cfg, const fs::path& checkpoint, const std::string& prompt,
                        const std::optional<fs::path>& clip_dir, const fs::path& out) {
  const NoiseSchedule schedule = cfg.build_schedule();
  const PromptTable prompts = cfg.prompt_table();
  const Condition cond = prompts.at(prompt);
  Checkpoint ckpt = load_checkpoint(checkpoint);
  check_compatible(ckpt.meta, cfg.model_dims(), schedule);

  SampleSource source;
  std::size_t frames = static_cast<std::size_t>(cfg.data.frames);
  if (cfg.sample.init == InitMode::kInversion) {
    if (!clip_dir) throw Error(ErrorCode::kConfig, "inversion init needs --clip with the source clip");
    source.clip = load_clip_any(*clip_dir);
    source.condition = prompts.at(cfg.prompts.source);
    frames = source.clip->frame_count();
  }
  SampleResult result = sample(ckpt.model, cond, schedule, cfg.sample, frames, source);

  fs::create_directories(out);
  write_frames(out / "frames", decode_frames(result.clip));
  save_clip(out / "clip.vtc", result.clip);
  std::vector<std::string> lines;
  for (const auto& d : result.diagnostics) lines.push_back(diagnostics_json(d));
  write_lines(out / "diagnostics.jsonl", lines);
  write_text(out / "config.json", to_json(cfg));
  return result;
}

std::string EvalReport::to_json() const {
  json j;
  j["frames"] = frames;
  j["vl_score"] = eval.vl.score;
  j["mean_pairwise_consistency"] = eval.pairwise;
  json pairs = json::array();
  for (const auto& p : eval.vl.pairs) {
    pairs.push_back({{"frame", p.frame}, {"similarity", p.similarity}, {"offset", {p.offset_i, p.offset_j}}});
  }
  j["pairs"] = std::move(pairs);
  return j.dump(2) + "\n";
}

EvalReport run_eval(const ExperimentConfig& cfg, const fs::path& input) {
  const LatentVideo clip = load_clip_any(input);
  return EvalReport{evaluate_clip(clip, cfg.metric), clip.frame_count()};
}

std::string AnalyzeReport::to_json() const {
  json j = json::array();
  for (const auto& r : rows) {
    j.push_back({{"t", r.t}, {"c", r.c}, {"alpha_bar_ratio", r.alpha_bar_ratio}, {"max_residual", r.max_residual}});
  }
  return json{{"rows", j}}.dump(2) + "\n";
}

AnalyzeReport run_analyze(const ExperimentConfig& cfg, const fs::path& checkpoint, const fs::path& clip_dir,
                          const std::vector<int>& timesteps) {
  const NoiseSchedule schedule = cfg.build_schedule();
  Checkpoint ckpt = load_checkpoint(checkpoint);
  check_compatible(ckpt.meta, cfg.model_dims(), schedule);
  const LatentVideo clip = load_clip_any(clip_dir);
  const Condition cond = cfg.prompt_table().at(cfg.prompts.source);
  const SeededRng root(cfg.sample.seed, 0x616e616cULL);

  AnalyzeReport report;
  for (int t : timesteps) {
    if (t < 1 || t > schedule.steps()) {
      throw Error(ErrorCode::kTimestep, "analyze timestep " + std::to_string(t) + " outside [1, " +
                                            std::to_string(schedule.steps()) + "]");
    }
    const LatentVideo noise = gaussian_video(root.split(static_cast<std::uint64_t>(t)), clip.frame_count(),
                                             clip.frame_dims());
    const LatentVideo x_t = forward_noise(clip, t, noise, schedule);
    const NoisePrediction eps = forward(ckpt.model, x_t, t, cond);
    const LatentVideo x_prev = ddim_step(x_t, eps, t, t - 1, schedule);
    const auto residuals = adjacent_difference_residual(x_t, x_prev, eps, t, schedule);
    AnalyzeRow row;
    row.t = t;
    row.c = coefficient_c(t, schedule);
    row.alpha_bar_ratio = std::sqrt(schedule.alpha_bar(t - 1) / schedule.alpha_bar(t));
    row.max_residual = residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
    report.rows.push_back(row);
  }
  return report;
}

std::string ComparisonReport::table() const {
  std::size_t width = 3;
  for (const auto& r : runs) width = std::max(width, r.run.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "run" << std::right << std::setw(12) << "VL"
      << std::setw(12) << "pairwise" << std::setw(14) << "mean|d_eps|" << std::setw(12) << "mean|d_x|" << "\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& r : runs) {
    out << std::left << std::setw(static_cast<int>(width)) << r.run << std::right << std::setw(12) << r.vl_score
        << std::setw(12) << r.pairwise << std::setw(14) << r.mean_d_eps << std::setw(12) << r.mean_d_x << "\n";
  }
  return out.str();
}

std::string ComparisonReport::series_csv() const {
  std::ostringstream out;
  out << "run,vl_score,mean_pairwise_consistency,mean_d_eps,mean_d_x\n";
  out << std::setprecision(17);
  for (const auto& r : runs) {
    out << r.run << "," << r.vl_score << "," << r.pairwise << "," << r.mean_d_eps << "," << r.mean_d_x << "\n";
  }
  return out.str();
}

ComparisonReport run_report(const ExperimentConfig& cfg, const std::vector<fs::path>& run_dirs) {
  for (const auto& dir : run_dirs) {
    if (!fs::is_regular_file(dir / "diagnostics.jsonl")) {
      throw Error(ErrorCode::kIo, "run '" + dir.string() + "' has no diagnostics.jsonl");
    }
  }
  std::vector<std::future<RunSummary>> jobs;
  for (const auto& dir : run_dirs) {
    jobs.push_back(std::async(std::launch::async, [&cfg, dir] {
      const auto diags = read_diagnostics(dir / "diagnostics.jsonl");
      const ClipEvaluation eval = evaluate_clip(load_clip_any(dir), cfg.metric);
      RunSummary s;
      s.run = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
      s.vl_score = eval.vl.score;
      s.pairwise = eval.pairwise;
      for (const auto& d : diags) {
        s.mean_d_eps += d.mean_d_eps;
        s.mean_d_x += d.mean_d_x;
      }
      if (!diags.empty()) {
        s.mean_d_eps /= static_cast<double>(diags.size());
        s.mean_d_x /= static_cast<double>(diags.size());
      }
      return s;
    }));
  }
  ComparisonReport report;
  for (auto& j : jobs) report.runs.push_back(j.get());
  return report;
}

}  // namespace smoothdiff
