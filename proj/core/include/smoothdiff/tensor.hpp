#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace smoothdiff {

using Extents = std::vector<std::size_t>;

// Dense row-major tensor of doubles. Plain value type: copies are deep.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Extents dims);
  Tensor(Extents dims, std::vector<double> data);

  static Tensor filled(Extents dims, double value);

  const Extents& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }
  const double* data() const noexcept { return data_.data(); }
  double* data() noexcept { return data_.data(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  bool same_shape(const Tensor& other) const noexcept { return dims_ == other.dims_; }
  bool all_finite() const noexcept;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double scale);

  // a += scale * x
  Tensor& add_scaled(const Tensor& x, double scale);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Extents dims_;
  std::vector<double> data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);
Tensor operator*(double s, Tensor a);

std::size_t element_count(const Extents& dims);

double dot(const Tensor& a, const Tensor& b);
double squared_norm(const Tensor& t);
double l2_norm(const Tensor& t);

// dot(a, b) / (|a| |b|) over the flattened tensors. Throws kDegenerateInput
// when either side is all zeros.
double cosine_similarity(const Tensor& a, const Tensor& b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Counter-based generator: output n of (seed, stream) is a pure function of
// (seed, stream, n), so independent streams can be derived without sharing
// state and results do not depend on evaluation order.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  // Uniform in the open interval (0, 1).
  double uniform() noexcept;
  // Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;

  // Child generator on a derived stream; does not advance this generator.
  SeededRng split(std::uint64_t child) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// I.i.d. standard normal entries. Throws kInvalidDimension on empty or zero extents.
Tensor gaussian_sample(SeededRng& rng, const Extents& dims);

}  // namespace smoothdiff
