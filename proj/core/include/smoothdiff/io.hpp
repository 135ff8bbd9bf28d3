#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "smoothdiff/image.hpp"
#include "smoothdiff/tensor.hpp"

namespace smoothdiff {

struct NamedTensor {
  std::string name;
  Tensor tensor;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Tensor container ("VTC1"), all integers little-endian:
//   magic "VTC1" | u32 entry count | per entry:
//     u16 name length, name bytes, u32 rank, rank x u32 extents,
//     f64 values in row-major order
std::vector<std::uint8_t> encode_tensor_container(const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> decode_tensor_container(const std::vector<std::uint8_t>& bytes);

void write_tensor_container(const std::filesystem::path& path, const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> read_tensor_container(const std::filesystem::path& path);

// Binary PGM (P5, 1 channel) / PPM (P6, 3 channels), maxval 255.
std::vector<std::uint8_t> encode_netpbm(const Image& img);
Image decode_netpbm(const std::vector<std::uint8_t>& bytes);

// Writes frame_0000.pgm, frame_0001.pgm, ... (ppm for RGB) and returns the
// file names in temporal order.
std::vector<std::string> write_frames(const std::filesystem::path& dir, const std::vector<Image>& frames);
// Reads every .pgm/.ppm file in lexicographic order; all must share extents.
std::vector<Image> read_frames(const std::filesystem::path& dir);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace smoothdiff
