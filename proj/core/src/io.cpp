#include "smoothdiff/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "smoothdiff/error.hpp"

namespace smoothdiff {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'V', 'T', 'C', '1'};

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    le(bits, 8);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::kFormat, std::string("truncated ") + what + " at byte offset " + std::to_string(pos_));
    }
  }
  std::uint64_t le(int bytes, const char* what) {
    need(static_cast<std::size_t>(bytes), what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  double f64(const char* what) {
    const std::uint64_t bits = le(8, what);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_tensor_container(const std::vector<NamedTensor>& entries) {
  ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  std::vector<std::string_view> seen;
  for (const auto& e : entries) {
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw Error(ErrorCode::kFormat, "tensor name too long: " + e.name.substr(0, 32));
    }
    if (std::any_of(e.name.begin(), e.name.end(), [](char ch) { return static_cast<unsigned char>(ch) > 127; })) {
      throw Error(ErrorCode::kFormat, "tensor name is not ASCII: " + e.name);
    }
    if (std::find(seen.begin(), seen.end(), e.name) != seen.end()) {
      throw Error(ErrorCode::kFormat, "duplicate tensor name: " + e.name);
    }
    seen.push_back(e.name);
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.raw(e.name.data(), e.name.size());
    w.u32(static_cast<std::uint32_t>(e.tensor.rank()));
    for (auto d : e.tensor.dims()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : e.tensor.values()) w.f64(v);
  }
  return w.take();
}

std::vector<NamedTensor> decode_tensor_container(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  if (r.str(4, "magic") != std::string(kMagic, 4)) throw Error(ErrorCode::kFormat, "bad magic at byte offset 0");
  const auto count = r.le(4, "entry count");
  std::vector<NamedTensor> out;
  for (std::uint64_t e = 0; e < count; ++e) {
    const auto name_len = static_cast<std::size_t>(r.le(2, "name length"));
    std::string name = r.str(name_len, "name");
    const auto rank = static_cast<std::size_t>(r.le(4, "rank"));
    // Each extent needs 4 bytes; reject absurd ranks before allocating.
    r.need(rank * 4, "extents");
    Extents dims(rank);
    for (auto& d : dims) d = static_cast<std::size_t>(r.le(4, "extent"));
    const std::size_t n = element_count(dims);
    if (n > (bytes.size() - r.offset()) / 8) {
      throw Error(ErrorCode::kFormat, "truncated values of '" + name + "' at byte offset " + std::to_string(r.offset()));
    }
    std::vector<double> data(n);
    for (auto& v : data) v = r.f64("values");
    out.push_back(NamedTensor{std::move(name), Tensor(std::move(dims), std::move(data))});
  }
  if (!r.at_end()) {
    throw Error(ErrorCode::kFormat, "trailing bytes at byte offset " + std::to_string(r.offset()));
  }
  return out;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_tensor_container(const fs::path& path, const std::vector<NamedTensor>& entries) {
  write_file(path, encode_tensor_container(entries));
}

std::vector<NamedTensor> read_tensor_container(const fs::path& path) {
  try {
    return decode_tensor_container(read_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kFormat) throw;
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_netpbm(const Image& img) {
  if (img.channels != 1 && img.channels != 3) throw Error(ErrorCode::kFormat, "netpbm frames need 1 or 3 channels");
  if (img.pixels.size() != img.width * img.height * img.channels) {
    throw Error(ErrorCode::kFormat, "pixel buffer does not match image extents");
  }
  const std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(img.width) + " " +
                             std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

Image decode_netpbm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&](const char* what) {
    skip_space();
    std::size_t v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) throw Error(ErrorCode::kFormat, std::string("expected ") + what + " at byte offset " + std::to_string(start));
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(ErrorCode::kFormat, "not a binary PGM/PPM file");
  }
  pos = 2;
  Image img;
  img.channels = bytes[1] == '5' ? 1 : 3;
  img.width = number("width");
  img.height = number("height");
  const std::size_t maxval = number("maxval");
  if (maxval != 255) throw Error(ErrorCode::kFormat, "only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw Error(ErrorCode::kFormat, "malformed header");
  ++pos;
  const std::size_t n = img.width * img.height * img.channels;
  if (bytes.size() - pos != n) {
    throw Error(ErrorCode::kFormat, "expected " + std::to_string(n) + " pixel bytes at byte offset " + std::to_string(pos));
  }
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

std::vector<std::string> write_frames(const fs::path& dir, const std::vector<Image>& frames) {
  fs::create_directories(dir);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::string idx = std::to_string(i);
    idx.insert(0, idx.size() < 4 ? 4 - idx.size() : 0, '0');
    const std::string name = "frame_" + idx + (frames[i].channels == 1 ? ".pgm" : ".ppm");
    write_file(dir / name, encode_netpbm(frames[i]));
    names.push_back(name);
  }
  return names;
}

std::vector<Image> read_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> frames;
  for (const auto& f : files) {
    Image img = decode_netpbm(read_file(f));
    if (!frames.empty() && (img.width != frames.front().width || img.height != frames.front().height ||
                            img.channels != frames.front().channels)) {
      throw Error(ErrorCode::kFormat, f.filename().string() + " has extents differing from the first frame");
    }
    frames.push_back(std::move(img));
  }
  return frames;
}

}  // namespace smoothdiff
