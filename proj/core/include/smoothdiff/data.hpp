#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "smoothdiff/denoiser.hpp"
#include "smoothdiff/image.hpp"

namespace smoothdiff {

enum class ShapeKind { kSquare, kDisc };
enum class MotionKind { kLinear, kSinusoidal };

std::string_view to_string(ShapeKind s);
std::string_view to_string(MotionKind m);
ShapeKind parse_shape_kind(std::string_view name);
MotionKind parse_motion_kind(std::string_view name);

// Synthetic scene: one textured shape moving over a flat background.
// Positions are the shape's top-left corner (square) or bounding-box corner
// (disc) and are rounded to whole pixels per frame, so integer velocities give
// exact pixel shifts.
struct SceneSpec {
  ShapeKind shape = ShapeKind::kSquare;
  int size = 6;
  double background = -0.5;
  double foreground = 0.5;
  double texture = 0.3;  // amplitude of the fixed random texture on the shape
  MotionKind motion = MotionKind::kLinear;
  double velocity_x = 1.0;  // pixels per frame
  double velocity_y = 0.0;
  double amplitude = 0.0;  // sinusoidal: horizontal amplitude in pixels
  double period = 16.0;    // sinusoidal: frames per cycle
  int start_x = 1;
  int start_y = 5;
  int frames = 8;
  int height = 16;
  int width = 16;
  int channels = 1;

  void validate() const;
};

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Rounded shape position in frame m.
Point shape_position(const SceneSpec& spec, int m);

struct Clip {
  std::vector<Image> images;
  LatentVideo latents;  // dequantized images, values in [-1, 1]
};

// Renders the scene. Throws kSpec naming the first frame where the shape
// leaves the canvas.
Clip generate_clip(const SceneSpec& spec, const SeededRng& rng);

// Named prompts mapped to fixed random condition vectors. The empty name is
// the null prompt and maps to zeros.
class PromptTable {
 public:
  PromptTable() = default;
  PromptTable(std::size_t width, std::map<std::string, Condition> entries);

  static PromptTable build(const std::vector<std::string>& names, std::size_t width, std::uint64_t seed);

  std::size_t width() const noexcept { return width_; }
  const Condition& at(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::vector<std::string> names() const;
  const std::map<std::string, Condition>& entries() const noexcept { return entries_; }

  std::string to_json() const;
  static PromptTable from_json(std::string_view text);

 private:
  std::size_t width_ = 0;
  std::map<std::string, Condition> entries_;
};

}  // namespace smoothdiff
