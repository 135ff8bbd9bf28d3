#include "smoothdiff/tensor.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "smoothdiff/error.hpp"

namespace smoothdiff {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidDimension: return "invalid-dimension";
    case ErrorCode::kDegenerateInput: return "degenerate-input";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kTimestep: return "timestep";
    case ErrorCode::kInvalidSigma: return "invalid-sigma";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kInsufficientFrames: return "insufficient-frames";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kSpec: return "spec";
    case ErrorCode::kDiverged: return "diverged";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::kShape, "tensor extents differ");
}

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::size_t element_count(const Extents& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

Tensor::Tensor(Extents dims) : dims_(std::move(dims)), data_(element_count(dims_), 0.0) {}

Tensor::Tensor(Extents dims, std::vector<double> data) : dims_(std::move(dims)), data_(std::move(data)) {
  if (element_count(dims_) != data_.size()) {
    throw Error(ErrorCode::kShape, "extents hold " + std::to_string(element_count(dims_)) +
                                       " values but " + std::to_string(data_.size()) + " were given");
  }
}

Tensor Tensor::filled(Extents dims, double value) {
  Tensor t(std::move(dims));
  for (auto& v : t.data_) v = value;
  return t;
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double scale) {
  for (auto& v : data_) v *= scale;
  return *this;
}

Tensor& Tensor::add_scaled(const Tensor& x, double scale) {
  require_same_shape(*this, x);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * x.data_[i];
  return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(Tensor a, double s) { return a *= s; }
Tensor operator*(double s, Tensor a) { return a *= s; }

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.values()) acc += v * v;
  return acc;
}

double l2_norm(const Tensor& t) { return std::sqrt(squared_norm(t)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kShape, "cosine similarity of unequal lengths");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw Error(ErrorCode::kDegenerateInput, "cosine similarity of an all-zero vector");
  double s = ab / (std::sqrt(aa) * std::sqrt(bb));
  // Rounding can push |s| a hair past 1.
  if (s > 1.0) s = 1.0;
  if (s < -1.0) s = -1.0;
  return s;
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b);
  return cosine_similarity(a.values(), b.values());
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : seed_(seed), stream_(stream), key_(mix64(mix64(seed + kGolden) ^ (stream * 0xd6e8feb86659fd93ULL + 1))) {}

std::uint64_t SeededRng::next_u64() noexcept {
  const std::uint64_t n = counter_++;
  return mix64(key_ + (n + 1) * kGolden);
}

double SeededRng::uniform() noexcept {
  // 53 random bits, shifted by half an ulp so 0 is never produced.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double SeededRng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

SeededRng SeededRng::split(std::uint64_t child) const noexcept {
  return SeededRng(seed_, mix64(stream_ ^ mix64(child + kGolden)));
}

Tensor gaussian_sample(SeededRng& rng, const Extents& dims) {
  if (dims.empty()) throw Error(ErrorCode::kInvalidDimension, "no extents given");
  for (auto d : dims) {
    if (d == 0) throw Error(ErrorCode::kInvalidDimension, "zero extent");
  }
  Tensor t(dims);
  for (auto& v : t.values()) v = rng.normal();
  return t;
}

}  // namespace smoothdiff
