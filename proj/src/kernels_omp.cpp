#include <algorithm>
#include <cmath>
#include <vector>

#include <omp.h>

#include "leaware/kernels.hpp"

namespace leaware::kernels {
namespace {

// Below this many samples the parallel region costs more than it saves.
constexpr std::size_t kParallelThreshold = 64;
// Samples per gradient chunk; bounds the per-sample buffer to chunk x P.
constexpr std::size_t kGradChunk = 256;

struct Workspace {
  std::vector<std::vector<double>> acts;  // acts[0] = input, acts[l+1] = output of layer l
  std::vector<double> dz;
  std::vector<double> dz_prev;

  explicit Workspace(const ModelSpec& spec) {
    acts.resize(spec.layer_sizes.size());
    for (std::size_t l = 0; l < spec.layer_sizes.size(); ++l) acts[l].resize(spec.layer_sizes[l]);
    const auto widest = *std::max_element(spec.layer_sizes.begin(), spec.layer_sizes.end());
    dz.resize(widest);
    dz_prev.resize(widest);
  }
};

inline double activate(Activation a, double s) {
  return a == Activation::tanh ? std::tanh(s) : (s > 0.0 ? s : 0.0);
}

// Derivative expressed through the activation output.
inline double activate_deriv(Activation a, double out) {
  return a == Activation::tanh ? 1.0 - out * out : (out > 0.0 ? 1.0 : 0.0);
}

void forward_sample(const ModelSpec& spec, const std::vector<LayerLayout>& layout,
                    const double* p, std::span<const double> x, Workspace& ws) {
  std::copy(x.begin(), x.end(), ws.acts[0].begin());
  const std::size_t last = layout.size() - 1;
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const auto& L = layout[l];
    const double* w = p + L.weight_offset;
    const double* b = p + L.bias_offset;
    const double* in = ws.acts[l].data();
    double* out = ws.acts[l + 1].data();
    for (std::size_t o = 0; o < L.fan_out; ++o) {
      double s = b[o];
      const double* wrow = w + o * L.fan_in;
      for (std::size_t i = 0; i < L.fan_in; ++i) s += wrow[i] * in[i];
      out[o] = (l == last) ? s : activate(spec.activation, s);
    }
  }
}

// Writes d(loss_i)/dz into ws.dz and returns loss_i.
double output_grad(const ModelSpec& spec, const Batch& batch, std::size_t i, Workspace& ws) {
  const auto& z = ws.acts.back();
  const std::size_t k = z.size();
  if (spec.output == OutputKind::softmax_cross_entropy) {
    double m = z[0];
    for (std::size_t c = 1; c < k; ++c) m = std::max(m, z[c]);
    double se = 0.0;
    for (std::size_t c = 0; c < k; ++c) se += std::exp(z[c] - m);
    const double lse = m + std::log(se);
    const auto y = static_cast<std::size_t>(batch.labels[i]);
    for (std::size_t c = 0; c < k; ++c) ws.dz[c] = std::exp(z[c] - lse) - (c == y ? 1.0 : 0.0);
    return lse - z[y];
  }
  const auto t = batch.targets.row(i);
  double s = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double r = z[c] - t[c];
    ws.dz[c] = r;
    s += r * r;
  }
  return 0.5 * s;
}

double sample_loss(const ModelSpec& spec, const Batch& batch, std::size_t i, const Workspace& ws) {
  const auto& z = ws.acts.back();
  const std::size_t k = z.size();
  if (spec.output == OutputKind::softmax_cross_entropy) {
    double m = z[0];
    for (std::size_t c = 1; c < k; ++c) m = std::max(m, z[c]);
    double se = 0.0;
    for (std::size_t c = 0; c < k; ++c) se += std::exp(z[c] - m);
    const double lse = m + std::log(se);
    return lse - z[static_cast<std::size_t>(batch.labels[i])];
  }
  const auto t = batch.targets.row(i);
  double s = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double r = z[c] - t[c];
    s += r * r;
  }
  return 0.5 * s;
}

// Per-sample gradient written (not accumulated) into g.
void backward_sample(const ModelSpec& spec, const std::vector<LayerLayout>& layout,
                     const double* p, Workspace& ws, double* g) {
  for (std::size_t l = layout.size(); l-- > 0;) {
    const auto& L = layout[l];
    const double* in = ws.acts[l].data();
    double* gw = g + L.weight_offset;
    double* gb = g + L.bias_offset;
    for (std::size_t o = 0; o < L.fan_out; ++o) {
      const double d = ws.dz[o];
      double* grow = gw + o * L.fan_in;
      for (std::size_t i = 0; i < L.fan_in; ++i) grow[i] = d * in[i];
      gb[o] = d;
    }
    if (l == 0) break;
    const double* w = p + L.weight_offset;
    for (std::size_t i = 0; i < L.fan_in; ++i) {
      double s = 0.0;
      for (std::size_t o = 0; o < L.fan_out; ++o) s += w[o * L.fan_in + i] * ws.dz[o];
      ws.dz_prev[i] = s * activate_deriv(spec.activation, in[i]);
    }
    std::swap(ws.dz, ws.dz_prev);
  }
}

Matrix forward_layer_out(const ModelSpec& spec, const ParamVector& params, const Matrix& inputs,
                         std::size_t act_index) {
  const auto layout = spec.layout();
  const std::size_t n = inputs.rows();
  const std::size_t width = spec.layer_sizes[act_index];
  Matrix out(n, width);
  const double* p = params.data();
#pragma omp parallel if (n >= kParallelThreshold)
  {
    Workspace ws(spec);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      forward_sample(spec, layout, p, inputs.row(i), ws);
      std::copy(ws.acts[act_index].begin(), ws.acts[act_index].end(), out.row(i).begin());
    }
  }
  return out;
}

}  // namespace

Matrix forward(const ModelSpec& spec, const ParamVector& params, const Matrix& inputs) {
  return forward_layer_out(spec, params, inputs, spec.layer_sizes.size() - 1);
}

Matrix features(const ModelSpec& spec, const ParamVector& params, const Matrix& inputs) {
  return forward_layer_out(spec, params, inputs, spec.layer_sizes.size() - 2);
}

std::vector<double> sample_losses(const ModelSpec& spec, const ParamVector& params,
                                  const Batch& batch) {
  const auto layout = spec.layout();
  const std::size_t n = batch.size();
  std::vector<double> losses(n);
  const double* p = params.data();
#pragma omp parallel if (n >= kParallelThreshold)
  {
    Workspace ws(spec);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      forward_sample(spec, layout, p, batch.inputs.row(i), ws);
      losses[i] = sample_loss(spec, batch, i, ws);
    }
  }
  return losses;
}

LossAndGrad data_loss_and_grad(const ModelSpec& spec, const ParamVector& params,
                               const Batch& batch) {
  const auto layout = spec.layout();
  const std::size_t n = batch.size();
  const std::size_t dim = params.dim();
  const double* p = params.data();

  std::vector<double> total(dim, 0.0);
  std::vector<double> losses(n);
  std::vector<double> buffer(std::min(n, kGradChunk) * dim);

  for (std::size_t start = 0; start < n; start += kGradChunk) {
    const std::size_t count = std::min(kGradChunk, n - start);
    const bool par = count >= kParallelThreshold;
#pragma omp parallel if (par)
    {
      Workspace ws(spec);
#pragma omp for schedule(static)
      for (std::size_t r = 0; r < count; ++r) {
        const std::size_t i = start + r;
        forward_sample(spec, layout, p, batch.inputs.row(i), ws);
        losses[i] = output_grad(spec, batch, i, ws);
        backward_sample(spec, layout, p, ws, buffer.data() + r * dim);
      }
      // Each coordinate sums its column in sample order, matching the serial
      // accumulation exactly.
#pragma omp for schedule(static)
      for (std::size_t j = 0; j < dim; ++j) {
        double s = total[j];
        for (std::size_t r = 0; r < count; ++r) s += buffer[r * dim + j];
        total[j] = s;
      }
    }
  }

  LossAndGrad out;
  double sum = 0.0;
  for (double l : losses) sum += l;
  out.loss = sum / static_cast<double>(n);
  out.grad = ParamVector(dim);
  for (std::size_t j = 0; j < dim; ++j) out.grad[j] = total[j] / static_cast<double>(n);
  return out;
}

}  // namespace leaware::kernels
