#include "smoothdiff/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "smoothdiff/error.hpp"
#include "smoothdiff/sampler.hpp"

namespace smoothdiff {

std::string_view to_string(ShapeKind s) { return s == ShapeKind::kSquare ? "square" : "disc"; }
std::string_view to_string(MotionKind m) { return m == MotionKind::kLinear ? "linear" : "sinusoidal"; }

ShapeKind parse_shape_kind(std::string_view name) {
  if (name == "square") return ShapeKind::kSquare;
  if (name == "disc") return ShapeKind::kDisc;
  throw Error(ErrorCode::kConfig, "unknown shape '" + std::string(name) + "'");
}

MotionKind parse_motion_kind(std::string_view name) {
  if (name == "linear") return MotionKind::kLinear;
  if (name == "sinusoidal") return MotionKind::kSinusoidal;
  throw Error(ErrorCode::kConfig, "unknown motion '" + std::string(name) + "'");
}

void SceneSpec::validate() const {
  if (size < 1) throw Error(ErrorCode::kSpec, "shape size must be >= 1");
  if (frames < 1 || height < 1 || width < 1) throw Error(ErrorCode::kSpec, "frames and resolution must be >= 1");
  if (channels != 1 && channels != 3) throw Error(ErrorCode::kSpec, "channels must be 1 or 3");
  if (motion == MotionKind::kSinusoidal && !(period > 0.0)) throw Error(ErrorCode::kSpec, "period must be positive");
  if (!(texture >= 0.0)) throw Error(ErrorCode::kSpec, "texture amplitude must be >= 0");
  for (int m = 0; m < frames; ++m) {
    const Point p = shape_position(*this, m);
    if (p.x < 0 || p.y < 0 || p.x + size > width || p.y + size > height) {
      throw Error(ErrorCode::kSpec, "shape leaves the frame at frame " + std::to_string(m) + " (position " +
                                        std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
    }
  }
}

Point shape_position(const SceneSpec& spec, int m) {
  double x = spec.start_x;
  double y = spec.start_y + spec.velocity_y * m;
  if (spec.motion == MotionKind::kLinear) {
    x += spec.velocity_x * m;
  } else {
    x += spec.amplitude * std::sin(2.0 * std::numbers::pi * m / spec.period);
  }
  return Point{static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y))};
}

Clip generate_clip(const SceneSpec& spec, const SeededRng& rng) {
  spec.validate();
  const auto c = static_cast<std::size_t>(spec.channels);
  const auto h = static_cast<std::size_t>(spec.height);
  const auto w = static_cast<std::size_t>(spec.width);
  const auto s = static_cast<std::size_t>(spec.size);

  // Texture is attached to the shape, so it moves with it.
  SeededRng tex_rng = rng.split(0);
  std::vector<double> texture(c * s * s);
  for (auto& v : texture) v = spec.texture * (2.0 * tex_rng.uniform() - 1.0);

  const double centre = (spec.size - 1) / 2.0;
  const double radius_sq = (spec.size / 2.0) * (spec.size / 2.0);
  auto inside = [&](std::size_t dy, std::size_t dx) {
    if (spec.shape == ShapeKind::kSquare) return true;
    const double ey = static_cast<double>(dy) - centre;
    const double ex = static_cast<double>(dx) - centre;
    return ey * ey + ex * ex <= radius_sq;
  };

  Clip clip;
  std::vector<Tensor> frames;
  for (int m = 0; m < spec.frames; ++m) {
    const Point p = shape_position(spec, m);
    Tensor frame = Tensor::filled({c, h, w}, spec.background);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t dy = 0; dy < s; ++dy) {
        for (std::size_t dx = 0; dx < s; ++dx) {
          if (!inside(dy, dx)) continue;
          const double v = std::clamp(spec.foreground + texture[(ch * s + dy) * s + dx], -1.0, 1.0);
          frame[(ch * h + static_cast<std::size_t>(p.y) + dy) * w + static_cast<std::size_t>(p.x) + dx] = v;
        }
      }
    }
    frames.push_back(std::move(frame));
  }
  clip.images = decode_frames(LatentVideo(std::move(frames)));
  clip.latents = encode_images(clip.images);
  return clip;
}

PromptTable::PromptTable(std::size_t width, std::map<std::string, Condition> entries)
    : width_(width), entries_(std::move(entries)) {
  for (const auto& [name, cond] : entries_) {
    if (cond.width() != width_) throw Error(ErrorCode::kConfig, "prompt '" + name + "' has the wrong width");
  }
  entries_[""] = Condition::null(width_);
}

PromptTable PromptTable::build(const std::vector<std::string>& names, std::size_t width, std::uint64_t seed) {
  if (width == 0) throw Error(ErrorCode::kConfig, "condition width must be positive");
  const SeededRng root(seed, 0x70726f6dULL);
  std::map<std::string, Condition> entries;
  for (const auto& name : names) {
    if (name.empty()) continue;
    // Stream derived from the name so adding prompts does not move the others.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : name) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    SeededRng rng = root.split(h);
    Condition cond;
    cond.values.resize(width);
    for (auto& v : cond.values) v = rng.normal();
    entries[name] = std::move(cond);
  }
  return PromptTable(width, std::move(entries));
}

const Condition& PromptTable::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    std::string available;
    for (const auto& n : names()) available += (available.empty() ? "" : ", ") + ("'" + n + "'");
    throw Error(ErrorCode::kConfig, "unknown prompt '" + name + "'; available: " + available);
  }
  return it->second;
}

std::vector<std::string> PromptTable::names() const {
  std::vector<std::string> out;
  for (const auto& [name, cond] : entries_) {
    if (!name.empty()) out.push_back(name);
  }
  return out;
}

std::string PromptTable::to_json() const {
  nlohmann::ordered_json doc;
  doc["width"] = width_;
  auto& prompts = doc["prompts"];
  prompts = nlohmann::ordered_json::object();
  for (const auto& [name, cond] : entries_) prompts[name] = cond.values;
  return doc.dump(2) + "\n";
}

PromptTable PromptTable::from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    std::map<std::string, Condition> entries;
    for (const auto& [name, values] : doc.at("prompts").items()) {
      entries[name] = Condition{values.get<std::vector<double>>()};
    }
    return PromptTable(doc.at("width").get<std::size_t>(), std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("prompt table: ") + e.what());
  }
}

}  // namespace smoothdiff
