#include "smoothdiff/config.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "smoothdiff/error.hpp"
#include "smoothdiff/io.hpp"

namespace smoothdiff {

using json = nlohmann::ordered_json;

namespace {

// Reads keys out of one object, remembering which were consumed so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& doc, std::string path) : path_(std::move(path)) {
    if (doc.is_null()) return;
    if (!doc.is_object()) throw Error(ErrorCode::kConfig, "'" + path_ + "' must be an object");
    doc_ = &doc;
  }

  template <typename T>
  void read(const char* key, T& out) {
    used_.insert(key);
    if (!doc_ || !doc_->contains(key)) return;
    try {
      out = (*doc_)[key].template get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::kConfig, "bad value for '" + path_ + "." + key + "'");
    }
  }

  template <typename Enum, typename Parse>
  void read_enum(const char* key, Enum& out, Parse parse) {
    std::string name;
    used_.insert(key);
    if (!doc_ || !doc_->contains(key)) return;
    read(key, name);
    out = parse(name);
  }

  const json& child(const char* key) {
    static const json kNull;
    used_.insert(key);
    if (!doc_ || !doc_->contains(key)) return kNull;
    return (*doc_)[key];
  }

  void finish() const {
    if (!doc_) return;
    for (const auto& [key, value] : doc_->items()) {
      if (!used_.count(key)) throw Error(ErrorCode::kConfig, "unknown key '" + path_ + "." + key + "'");
    }
  }

 private:
  const json* doc_ = nullptr;
  std::string path_;
  std::set<std::string> used_;
};

CoefficientMode parse_c_mode(const std::string& name) {
  if (name == "per-timestep") return CoefficientMode::kPerTimestep;
  if (name == "fixed") return CoefficientMode::kFixed;
  throw Error(ErrorCode::kConfig, "unknown c_mode '" + name + "'");
}

const char* c_mode_name(CoefficientMode m) { return m == CoefficientMode::kFixed ? "fixed" : "per-timestep"; }

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::kConfig, "override '" + assignment + "' is not of the form key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw Error(ErrorCode::kConfig, "empty path segment in override '" + path + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

ExperimentConfig from_json(const json& doc) {
  ExperimentConfig cfg;
  Section root(doc, "config");

  Section schedule(root.child("schedule"), "schedule");
  schedule.read("timesteps", cfg.schedule.timesteps);
  schedule.read("beta_start", cfg.schedule.beta_start);
  schedule.read("beta_end", cfg.schedule.beta_end);
  schedule.finish();

  Section model(root.child("model"), "model");
  model.read("feature_width", cfg.model.feature_width);
  model.read("condition_width", cfg.model.condition_width);
  model.read("seed", cfg.model.seed);
  model.finish();

  Section train(root.child("train"), "train");
  train.read("steps", cfg.train.steps);
  train.read("learning_rate", cfg.train.optimizer.learning_rate);
  train.read("beta1", cfg.train.optimizer.beta1);
  train.read("beta2", cfg.train.optimizer.beta2);
  train.read("epsilon", cfg.train.optimizer.epsilon);
  train.read("null_condition_prob", cfg.train.null_condition_prob);
  train.read("seed", cfg.train.seed);
  train.read("checkpoint_every", cfg.train.checkpoint_every);
  train.read("shared_noise", cfg.train.shared_noise);
  train.finish();

  Section loss(root.child("loss"), "loss");
  loss.read_enum("variant", cfg.train.variant, parse_loss_variant);
  loss.read("lambda1", cfg.train.constraint.lambda1);
  loss.read("lambda2", cfg.train.constraint.lambda2);
  loss.read_enum("c_mode", cfg.train.constraint.c_mode, parse_c_mode);
  loss.read("fixed_c_timestep", cfg.train.constraint.fixed_c_timestep);
  loss.finish();

  Section sample(root.child("sample"), "sample");
  sample.read("num_steps", cfg.sample.num_steps);
  sample.read("sigma", cfg.sample.sigma);
  sample.read("guidance", cfg.sample.guidance);
  sample.read_enum("init", cfg.sample.init, parse_init_mode);
  sample.read("shared_init_noise", cfg.sample.shared_init_noise);
  sample.read("seed", cfg.sample.seed);
  Section constraint(sample.child("constraint"), "sample.constraint");
  constraint.read("enabled", cfg.sample.constraint.enabled);
  constraint.read("lambda3", cfg.sample.constraint.lambda3);
  constraint.read("lambda1", cfg.sample.constraint.lambda1);
  constraint.read("first_step", cfg.sample.constraint.first_step);
  constraint.read("last_step", cfg.sample.constraint.last_step);
  constraint.finish();
  sample.finish();

  Section metric(root.child("metric"), "metric");
  metric.read("k", cfg.metric.k);
  metric.read_enum("encoder", cfg.metric.encoder.mode, parse_encoder_mode);
  metric.read("pool", cfg.metric.encoder.pool);
  metric.finish();

  Section data(root.child("data"), "data");
  data.read_enum("shape", cfg.data.shape, parse_shape_kind);
  data.read("size", cfg.data.size);
  data.read("background", cfg.data.background);
  data.read("foreground", cfg.data.foreground);
  data.read("texture", cfg.data.texture);
  data.read_enum("motion", cfg.data.motion, parse_motion_kind);
  data.read("velocity_x", cfg.data.velocity_x);
  data.read("velocity_y", cfg.data.velocity_y);
  data.read("amplitude", cfg.data.amplitude);
  data.read("period", cfg.data.period);
  data.read("start_x", cfg.data.start_x);
  data.read("start_y", cfg.data.start_y);
  data.read("frames", cfg.data.frames);
  data.read("height", cfg.data.height);
  data.read("width", cfg.data.width);
  data.read("channels", cfg.data.channels);
  data.read("seed", cfg.data_seed);
  data.finish();

  Section prompts(root.child("prompts"), "prompts");
  prompts.read("names", cfg.prompts.names);
  prompts.read("source", cfg.prompts.source);
  prompts.read("target", cfg.prompts.target);
  prompts.read("seed", cfg.prompts.seed);
  prompts.finish();

  root.read("seeds", cfg.seeds);
  root.finish();

  // Fail early on values no command could run with.
  cfg.build_schedule();
  cfg.train.validate();
  cfg.sample.validate(cfg.schedule.timesteps);
  cfg.metric.validate();
  if (cfg.model.feature_width == 0 || cfg.model.condition_width == 0) {
    throw Error(ErrorCode::kConfig, "model widths must be positive");
  }
  return cfg;
}

}  // namespace

NoiseSchedule ExperimentConfig::build_schedule() const {
  return build_linear_schedule(schedule.timesteps, schedule.beta_start, schedule.beta_end);
}

DenoiserDims ExperimentConfig::model_dims() const {
  return DenoiserDims{static_cast<std::size_t>(data.channels), static_cast<std::size_t>(data.height),
                      static_cast<std::size_t>(data.width),      model.feature_width,
                      model.condition_width,                      schedule.timesteps};
}

PromptTable ExperimentConfig::prompt_table() const {
  return PromptTable::build(prompts.names, model.condition_width, prompts.seed);
}

ExperimentConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!json_text.empty()) {
    doc = json::parse(json_text, nullptr, false, true);
    if (doc.is_discarded()) throw Error(ErrorCode::kConfig, "config is not valid JSON");
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return from_json(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  return parse_config(read_text(path), overrides);
}

std::string to_json(const ExperimentConfig& c) {
  json doc;
  doc["schedule"] = {{"timesteps", c.schedule.timesteps},
                     {"beta_start", c.schedule.beta_start},
                     {"beta_end", c.schedule.beta_end}};
  doc["model"] = {{"feature_width", c.model.feature_width},
                  {"condition_width", c.model.condition_width},
                  {"seed", c.model.seed}};
  doc["train"] = {{"steps", c.train.steps},
                  {"learning_rate", c.train.optimizer.learning_rate},
                  {"beta1", c.train.optimizer.beta1},
                  {"beta2", c.train.optimizer.beta2},
                  {"epsilon", c.train.optimizer.epsilon},
                  {"null_condition_prob", c.train.null_condition_prob},
                  {"seed", c.train.seed},
                  {"checkpoint_every", c.train.checkpoint_every},
                  {"shared_noise", c.train.shared_noise}};
  doc["loss"] = {{"variant", std::string(to_string(c.train.variant))},
                 {"lambda1", c.train.constraint.lambda1},
                 {"lambda2", c.train.constraint.lambda2},
                 {"c_mode", c_mode_name(c.train.constraint.c_mode)},
                 {"fixed_c_timestep", c.train.constraint.fixed_c_timestep}};
  doc["sample"] = {{"num_steps", c.sample.num_steps},
                   {"sigma", c.sample.sigma},
                   {"guidance", c.sample.guidance},
                   {"init", std::string(to_string(c.sample.init))},
                   {"shared_init_noise", c.sample.shared_init_noise},
                   {"seed", c.sample.seed},
                   {"constraint",
                    {{"enabled", c.sample.constraint.enabled},
                     {"lambda3", c.sample.constraint.lambda3},
                     {"lambda1", c.sample.constraint.lambda1},
                     {"first_step", c.sample.constraint.first_step},
                     {"last_step", c.sample.constraint.last_step}}}};
  doc["metric"] = {{"k", c.metric.k},
                   {"encoder", std::string(to_string(c.metric.encoder.mode))},
                   {"pool", c.metric.encoder.pool}};
  doc["data"] = {{"shape", std::string(to_string(c.data.shape))},
                 {"size", c.data.size},
                 {"background", c.data.background},
                 {"foreground", c.data.foreground},
                 {"texture", c.data.texture},
                 {"motion", std::string(to_string(c.data.motion))},
                 {"velocity_x", c.data.velocity_x},
                 {"velocity_y", c.data.velocity_y},
                 {"amplitude", c.data.amplitude},
                 {"period", c.data.period},
                 {"start_x", c.data.start_x},
                 {"start_y", c.data.start_y},
                 {"frames", c.data.frames},
                 {"height", c.data.height},
                 {"width", c.data.width},
                 {"channels", c.data.channels},
                 {"seed", c.data_seed}};
  doc["prompts"] = {{"names", c.prompts.names},
                    {"source", c.prompts.source},
                    {"target", c.prompts.target},
                    {"seed", c.prompts.seed}};
  doc["seeds"] = c.seeds;
  return doc.dump(2) + "\n";
}

}  // namespace smoothdiff
