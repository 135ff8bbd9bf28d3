#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace smoothdiff {

// 8-bit frame, channels interleaved per pixel (HWC), 1 or 3 channels.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return pixels[(y * width + x) * channels + c];
  }
  friend bool operator==(const Image&, const Image&) = default;
};

}  // namespace smoothdiff
