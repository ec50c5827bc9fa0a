// Serial reference kernels. Straight loops, one sample at a time, gradient
// accumulated directly into the total.

#include <algorithm>
#include <cmath>
#include <vector>

#include "leaware/kernels.hpp"

namespace leaware::reference {
namespace {

std::vector<std::vector<double>> run_forward(const ModelSpec& spec, const ParamVector& params,
                                             std::span<const double> x) {
  const auto layout = spec.layout();
  std::vector<std::vector<double>> acts;
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layout.size(); ++l) {
    const auto& L = layout[l];
    std::vector<double> out(L.fan_out);
    for (std::size_t o = 0; o < L.fan_out; ++o) {
      double s = params[L.bias_offset + o];
      for (std::size_t i = 0; i < L.fan_in; ++i) {
        s += params[L.weight_offset + o * L.fan_in + i] * acts[l][i];
      }
      if (l + 1 < layout.size()) {
        s = spec.activation == Activation::tanh ? std::tanh(s) : (s > 0.0 ? s : 0.0);
      }
      out[o] = s;
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

double log_sum_exp(const std::vector<double>& z) {
  double m = z[0];
  for (std::size_t c = 1; c < z.size(); ++c) m = std::max(m, z[c]);
  double se = 0.0;
  for (double v : z) se += std::exp(v - m);
  return m + std::log(se);
}

double loss_of(const ModelSpec& spec, const Batch& batch, std::size_t i,
               const std::vector<double>& z) {
  if (spec.output == OutputKind::softmax_cross_entropy) {
    return log_sum_exp(z) - z[static_cast<std::size_t>(batch.labels[i])];
  }
  double s = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    const double r = z[c] - batch.targets(i, c);
    s += r * r;
  }
  return 0.5 * s;
}

Matrix layer_output(const ModelSpec& spec, const ParamVector& params, const Matrix& inputs,
                    std::size_t act_index) {
  Matrix out(inputs.rows(), spec.layer_sizes[act_index]);
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    const auto acts = run_forward(spec, params, inputs.row(i));
    std::copy(acts[act_index].begin(), acts[act_index].end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

Matrix forward(const ModelSpec& spec, const ParamVector& params, const Matrix& inputs) {
  return layer_output(spec, params, inputs, spec.layer_sizes.size() - 1);
}

Matrix features(const ModelSpec& spec, const ParamVector& params, const Matrix& inputs) {
  return layer_output(spec, params, inputs, spec.layer_sizes.size() - 2);
}

std::vector<double> sample_losses(const ModelSpec& spec, const ParamVector& params,
                                  const Batch& batch) {
  std::vector<double> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out[i] = loss_of(spec, batch, i, run_forward(spec, params, batch.inputs.row(i)).back());
  }
  return out;
}

LossAndGrad data_loss_and_grad(const ModelSpec& spec, const ParamVector& params,
                               const Batch& batch) {
  const auto layout = spec.layout();
  const std::size_t n = batch.size();
  std::vector<double> total(params.dim(), 0.0);
  double loss_sum = 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    const auto acts = run_forward(spec, params, batch.inputs.row(i));
    const auto& z = acts.back();
    loss_sum += loss_of(spec, batch, i, z);

    std::vector<double> dz(z.size());
    if (spec.output == OutputKind::softmax_cross_entropy) {
      const double lse = log_sum_exp(z);
      const auto y = static_cast<std::size_t>(batch.labels[i]);
      for (std::size_t c = 0; c < z.size(); ++c) dz[c] = std::exp(z[c] - lse) - (c == y ? 1.0 : 0.0);
    } else {
      for (std::size_t c = 0; c < z.size(); ++c) dz[c] = z[c] - batch.targets(i, c);
    }

    for (std::size_t l = layout.size(); l-- > 0;) {
      const auto& L = layout[l];
      const auto& in = acts[l];
      for (std::size_t o = 0; o < L.fan_out; ++o) {
        for (std::size_t k = 0; k < L.fan_in; ++k) {
          total[L.weight_offset + o * L.fan_in + k] += dz[o] * in[k];
        }
        total[L.bias_offset + o] += dz[o];
      }
      if (l == 0) break;
      std::vector<double> prev(L.fan_in);
      for (std::size_t k = 0; k < L.fan_in; ++k) {
        double s = 0.0;
        for (std::size_t o = 0; o < L.fan_out; ++o) {
          s += params[L.weight_offset + o * L.fan_in + k] * dz[o];
        }
        const double d = spec.activation == Activation::tanh ? 1.0 - in[k] * in[k]
                                                             : (in[k] > 0.0 ? 1.0 : 0.0);
        prev[k] = s * d;
      }
      dz = std::move(prev);
    }
  }

  LossAndGrad out;
  out.loss = loss_sum / static_cast<double>(n);
  out.grad = ParamVector(params.dim());
  for (std::size_t j = 0; j < params.dim(); ++j) out.grad[j] = total[j] / static_cast<double>(n);
  return out;
}

}  // namespace leaware::reference
