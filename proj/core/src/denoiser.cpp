#include "smoothdiff/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smoothdiff/error.hpp"

namespace smoothdiff {

namespace {

constexpr std::array<std::string_view, kParamCount> kNames = {
    "encoder1.weight", "encoder1.bias", "encoder2.weight", "encoder2.bias", "temporal.gate", "time.embedding",
    "condition.proj",  "decoder1.weight", "decoder1.bias", "decoder2.weight", "decoder2.bias", "output.skip",
};

std::array<Extents, kParamCount> expected_extents(const DenoiserDims& d) {
  const auto n = d.pixels();
  const auto w = d.feature_width;
  return {Extents{w, n}, Extents{w},    Extents{w, w}, Extents{w}, Extents{w},
          Extents{static_cast<std::size_t>(d.timesteps), w},
          Extents{w, d.condition_width},
          Extents{w, w}, Extents{w}, Extents{n, w}, Extents{n}, Extents{1}};
}

// out = W x + b (b may be null); W is [rows, cols] row-major.
void affine(const Tensor& w, const double* x, const double* b, double* out) {
  const std::size_t rows = w.dims()[0];
  const std::size_t cols = w.dims()[1];
  const double* wp = w.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = b ? b[r] : 0.0;
    const double* row = wp + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

// out += W^T g
void affine_transpose_acc(const Tensor& w, const double* g, double* out) {
  const std::size_t rows = w.dims()[0];
  const std::size_t cols = w.dims()[1];
  const double* wp = w.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const double* row = wp + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * gr;
  }
}

// dW += g x^T
void outer_acc(Tensor& dw, const double* g, const double* x) {
  const std::size_t rows = dw.dims()[0];
  const std::size_t cols = dw.dims()[1];
  double* dp = dw.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    double* row = dp + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

using Vec = std::vector<double>;

struct Activations {
  std::vector<Vec> h1, h2, nb, m, h3;
};

void validate_inputs(const DenoiserModel& model, const LatentVideo& x_t, int t, const Condition& cond) {
  const auto& d = model.dims();
  if (x_t.frame_count() == 0) throw Error(ErrorCode::kShape, "empty clip");
  if (x_t.frame_dims() != d.frame_extents()) throw Error(ErrorCode::kShape, "clip extents do not match model");
  if (cond.width() != d.condition_width) {
    throw Error(ErrorCode::kShape, "condition width " + std::to_string(cond.width()) + " != " +
                                       std::to_string(d.condition_width));
  }
  if (t < 1 || t > d.timesteps) {
    throw Error(ErrorCode::kTimestep, "t = " + std::to_string(t) + " outside [1, " + std::to_string(d.timesteps) + "]");
  }
}

// Neighbour mean of h2 for frame f; a lone frame is its own neighbour.
void neighbour_mean(const std::vector<Vec>& h2, std::size_t f, Vec& out) {
  const std::size_t frames = h2.size();
  const std::size_t width = h2[f].size();
  if (frames == 1) {
    out = h2[f];
    return;
  }
  out.assign(width, 0.0);
  double count = 0.0;
  if (f > 0) {
    for (std::size_t k = 0; k < width; ++k) out[k] += h2[f - 1][k];
    count += 1.0;
  }
  if (f + 1 < frames) {
    for (std::size_t k = 0; k < width; ++k) out[k] += h2[f + 1][k];
    count += 1.0;
  }
  for (auto& v : out) v /= count;
}

NoisePrediction run_forward(const DenoiserModel& model, const LatentVideo& x_t, int t, const Condition& cond,
                            Activations* acts) {
  const auto& p = model.params();
  const auto& d = model.dims();
  const std::size_t frames = x_t.frame_count();
  const std::size_t width = d.feature_width;

  // Frame-independent part of the first pre-activation.
  Vec shift(width);
  affine(p[Param::kConditionProj], cond.values.data(), p[Param::kEncoder1Bias].data(), shift.data());
  const double* emb = p[Param::kTimeEmbedding].data() + static_cast<std::size_t>(t - 1) * width;
  for (std::size_t k = 0; k < width; ++k) shift[k] += emb[k];

  Activations local;
  Activations& a = acts ? *acts : local;
  a.h1.assign(frames, Vec(width));
  a.h2.assign(frames, Vec(width));
  a.nb.assign(frames, Vec(width));
  a.m.assign(frames, Vec(width));
  a.h3.assign(frames, Vec(width));

  for (std::size_t f = 0; f < frames; ++f) {
    affine(p[Param::kEncoder1Weight], x_t[f].data(), shift.data(), a.h1[f].data());
    for (auto& v : a.h1[f]) v = std::tanh(v);
    affine(p[Param::kEncoder2Weight], a.h1[f].data(), p[Param::kEncoder2Bias].data(), a.h2[f].data());
    for (auto& v : a.h2[f]) v = std::tanh(v);
  }

  const double* gate = p[Param::kTemporalGate].data();
  const double skip = p[Param::kOutputSkip][0];
  std::vector<Tensor> out;
  out.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    neighbour_mean(a.h2, f, a.nb[f]);
    for (std::size_t k = 0; k < width; ++k) a.m[f][k] = a.h2[f][k] + gate[k] * (a.nb[f][k] - a.h2[f][k]);
    affine(p[Param::kDecoder1Weight], a.m[f].data(), p[Param::kDecoder1Bias].data(), a.h3[f].data());
    for (auto& v : a.h3[f]) v = std::tanh(v);
    Tensor y(d.frame_extents());
    affine(p[Param::kDecoder2Weight], a.h3[f].data(), p[Param::kDecoder2Bias].data(), y.data());
    y.add_scaled(x_t[f], skip);
    out.push_back(std::move(y));
  }
  return LatentVideo(std::move(out));
}

}  // namespace

std::string_view param_name(Param p) { return kNames[static_cast<std::size_t>(p)]; }
std::string_view param_name(std::size_t index) { return kNames.at(index); }

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (std::size_t i = 0; i < kParamCount; ++i) out.tensors[i] = Tensor(tensors[i].dims());
  return out;
}

bool ParameterSet::all_finite() const noexcept {
  for (const auto& t : tensors) {
    if (!t.all_finite()) return false;
  }
  return true;
}

DenoiserModel::DenoiserModel(DenoiserDims dims, ParameterSet params) : dims_(dims), params_(std::move(params)) {
  if (dims_.pixels() == 0 || dims_.feature_width == 0 || dims_.condition_width == 0 || dims_.timesteps < 1) {
    throw Error(ErrorCode::kConfig, "model widths must be positive");
  }
  const auto expected = expected_extents(dims_);
  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (params_.tensors[i].dims() != expected[i]) {
      throw Error(ErrorCode::kShape, "parameter " + std::string(kNames[i]) + " has unexpected extents");
    }
  }
}

DenoiserModel init_model(SeededRng& rng, const DenoiserDims& dims) {
  if (dims.pixels() == 0 || dims.feature_width == 0 || dims.condition_width == 0 || dims.timesteps < 1) {
    throw Error(ErrorCode::kConfig, "model widths must be positive");
  }
  const auto extents = expected_extents(dims);
  ParameterSet p;
  for (std::size_t i = 0; i < kParamCount; ++i) p.tensors[i] = Tensor(extents[i]);

  auto fill_normal = [&](Param which, double scale) {
    SeededRng stream = rng.split(static_cast<std::uint64_t>(which));
    for (auto& v : p[which].values()) v = scale * stream.normal();
  };
  fill_normal(Param::kEncoder1Weight, 1.0 / std::sqrt(static_cast<double>(dims.pixels())));
  fill_normal(Param::kEncoder2Weight, 1.0 / std::sqrt(static_cast<double>(dims.feature_width)));
  fill_normal(Param::kDecoder1Weight, 1.0 / std::sqrt(static_cast<double>(dims.feature_width)));
  fill_normal(Param::kDecoder2Weight, 1.0 / std::sqrt(static_cast<double>(dims.feature_width)));
  fill_normal(Param::kConditionProj, 1.0 / std::sqrt(static_cast<double>(dims.condition_width)));
  fill_normal(Param::kTimeEmbedding, 0.1);
  for (auto& g : p[Param::kTemporalGate].values()) g = 0.5;
  // Advance the parent so successive init_model calls on one generator differ.
  rng.next_u64();
  return DenoiserModel(dims, std::move(p));
}

NoisePrediction forward(const DenoiserModel& model, const LatentVideo& x_t, int t, const Condition& cond) {
  validate_inputs(model, x_t, t, cond);
  return run_forward(model, x_t, t, cond, nullptr);
}

ParameterSet backward(const DenoiserModel& model, const LatentVideo& x_t, int t, const Condition& cond,
                      const NoisePrediction& out_grad) {
  validate_inputs(model, x_t, t, cond);
  if (!out_grad.same_shape(x_t)) throw Error(ErrorCode::kShape, "output gradient shape differs from clip");

  Activations a;
  run_forward(model, x_t, t, cond, &a);

  const auto& p = model.params();
  const std::size_t frames = x_t.frame_count();
  const std::size_t width = model.dims().feature_width;
  const double* gate = p[Param::kTemporalGate].data();
  ParameterSet g = p.zeros_like();

  std::vector<Vec> d_h2(frames, Vec(width, 0.0));
  Vec d_h3(width), d_a3(width), d_m(width);
  for (std::size_t f = 0; f < frames; ++f) {
    const double* dy = out_grad[f].data();
    outer_acc(g[Param::kDecoder2Weight], dy, a.h3[f].data());
    double* db4 = g[Param::kDecoder2Bias].data();
    for (std::size_t i = 0; i < out_grad[f].size(); ++i) db4[i] += dy[i];
    g[Param::kOutputSkip][0] += dot(out_grad[f], x_t[f]);

    std::fill(d_h3.begin(), d_h3.end(), 0.0);
    affine_transpose_acc(p[Param::kDecoder2Weight], dy, d_h3.data());
    for (std::size_t k = 0; k < width; ++k) d_a3[k] = d_h3[k] * (1.0 - a.h3[f][k] * a.h3[f][k]);
    outer_acc(g[Param::kDecoder1Weight], d_a3.data(), a.m[f].data());
    double* db3 = g[Param::kDecoder1Bias].data();
    for (std::size_t k = 0; k < width; ++k) db3[k] += d_a3[k];

    std::fill(d_m.begin(), d_m.end(), 0.0);
    affine_transpose_acc(p[Param::kDecoder1Weight], d_a3.data(), d_m.data());

    double* dgate = g[Param::kTemporalGate].data();
    for (std::size_t k = 0; k < width; ++k) {
      dgate[k] += d_m[k] * (a.nb[f][k] - a.h2[f][k]);
      d_h2[f][k] += d_m[k] * (1.0 - gate[k]);
    }
    if (frames == 1) {
      for (std::size_t k = 0; k < width; ++k) d_h2[f][k] += d_m[k] * gate[k];
    } else {
      const double count = (f > 0 ? 1.0 : 0.0) + (f + 1 < frames ? 1.0 : 0.0);
      for (std::size_t k = 0; k < width; ++k) {
        const double share = d_m[k] * gate[k] / count;
        if (f > 0) d_h2[f - 1][k] += share;
        if (f + 1 < frames) d_h2[f + 1][k] += share;
      }
    }
  }

  Vec d_a2(width), d_h1(width), d_a1(width);
  double* demb = g[Param::kTimeEmbedding].data() + static_cast<std::size_t>(t - 1) * width;
  Vec d_shift(width, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t k = 0; k < width; ++k) d_a2[k] = d_h2[f][k] * (1.0 - a.h2[f][k] * a.h2[f][k]);
    outer_acc(g[Param::kEncoder2Weight], d_a2.data(), a.h1[f].data());
    double* db2 = g[Param::kEncoder2Bias].data();
    for (std::size_t k = 0; k < width; ++k) db2[k] += d_a2[k];

    std::fill(d_h1.begin(), d_h1.end(), 0.0);
    affine_transpose_acc(p[Param::kEncoder2Weight], d_a2.data(), d_h1.data());
    for (std::size_t k = 0; k < width; ++k) d_a1[k] = d_h1[k] * (1.0 - a.h1[f][k] * a.h1[f][k]);
    outer_acc(g[Param::kEncoder1Weight], d_a1.data(), x_t[f].data());
    for (std::size_t k = 0; k < width; ++k) d_shift[k] += d_a1[k];
  }
  double* db1 = g[Param::kEncoder1Bias].data();
  for (std::size_t k = 0; k < width; ++k) {
    db1[k] += d_shift[k];
    demb[k] += d_shift[k];
  }
  outer_acc(g[Param::kConditionProj], d_shift.data(), cond.values.data());
  return g;
}

}  // namespace smoothdiff
