#include "leaware/diffengine.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "leaware/errors.hpp"
#include "leaware/kernels.hpp"
#include "leaware/rng.hpp"

namespace leaware {

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

std::string to_string(OutputKind o) {
  return o == OutputKind::softmax_cross_entropy ? "softmax_ce" : "mse";
}

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

OutputKind parse_output(const std::string& name) {
  if (name == "softmax_ce" || name == "softmax-cross-entropy") {
    return OutputKind::softmax_cross_entropy;
  }
  if (name == "mse" || name == "mean-squared-error") return OutputKind::mean_squared_error;
  throw std::invalid_argument("unknown output kind '" + name + "'");
}

void ModelSpec::validate() const {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("ModelSpec: need at least input and output layers");
  }
  for (auto s : layer_sizes) {
    if (s == 0) throw std::invalid_argument("ModelSpec: layer sizes must be >= 1");
  }
}

std::vector<LayerLayout> ModelSpec::layout() const {
  std::vector<LayerLayout> out;
  out.reserve(layer_sizes.size() - 1);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    LayerLayout L;
    L.fan_in = layer_sizes[l];
    L.fan_out = layer_sizes[l + 1];
    L.weight_offset = offset;
    L.bias_offset = offset + L.fan_in * L.fan_out;
    offset = L.bias_offset + L.fan_out;
    out.push_back(L);
  }
  return out;
}

std::size_t parameter_count(const ModelSpec& spec) {
  spec.validate();
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    count += (spec.layer_sizes[l] + 1) * spec.layer_sizes[l + 1];
  }
  return count;
}

namespace {

void validate_model(const ModelSpec& spec, const ParamVector& params) {
  const auto expected = parameter_count(spec);
  if (params.dim() != expected) {
    throw std::invalid_argument("params dim " + std::to_string(params.dim()) +
                                " does not match model parameter count " +
                                std::to_string(expected));
  }
  if (!params.all_finite()) throw std::invalid_argument("params contain non-finite values");
}

void validate_matrix_inputs(const ModelSpec& spec, const Matrix& inputs) {
  if (inputs.rows() == 0) throw std::invalid_argument("empty batch");
  if (inputs.cols() != spec.input_dim()) {
    throw std::invalid_argument("input dim " + std::to_string(inputs.cols()) +
                                " does not match model input size " +
                                std::to_string(spec.input_dim()));
  }
  if (!inputs.all_finite()) throw std::invalid_argument("inputs contain non-finite values");
}

void check_finite(const ParamVector& v, const char* what) {
  if (!v.all_finite()) throw NumericalError(std::string(what) + ": non-finite result");
}

}  // namespace

void validate_inputs(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  validate_model(spec, params);
  validate_matrix_inputs(spec, batch.inputs);
  if (spec.output == OutputKind::softmax_cross_entropy) {
    if (batch.labels.size() != batch.size()) {
      throw std::invalid_argument("label count does not match batch size");
    }
    for (int y : batch.labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= spec.output_dim()) {
        throw std::invalid_argument("label " + std::to_string(y) + " out of range for " +
                                    std::to_string(spec.output_dim()) + " classes");
      }
    }
  } else {
    if (batch.targets.rows() != batch.size() || batch.targets.cols() != spec.output_dim()) {
      throw std::invalid_argument("regression targets must be n x output_dim");
    }
    if (!batch.targets.all_finite()) throw std::invalid_argument("targets contain non-finite values");
  }
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  ParamVector p(parameter_count(spec));
  Rng rng(seed);
  for (const auto& L : spec.layout()) {
    const double limit = std::sqrt(6.0 / static_cast<double>(L.fan_in + L.fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t j = 0; j < L.fan_in * L.fan_out; ++j) p[L.weight_offset + j] = dist(rng);
  }
  return p;
}

Matrix forward(const ModelSpec& spec, const ParamVector& params, const Batch& batch) {
  validate_model(spec, params);
  validate_matrix_inputs(spec, batch.inputs);
  return kernels::forward(spec, params, batch.inputs);
}

Matrix features(const ModelSpec& spec, const ParamVector& params, const Matrix& inputs) {
  validate_model(spec, params);
  validate_matrix_inputs(spec, inputs);
  return kernels::features(spec, params, inputs);
}

double loss(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
            double weight_decay) {
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  validate_inputs(spec, params, batch);
  const auto losses = kernels::sample_losses(spec, params, batch);
  double sum = 0.0;
  for (double l : losses) sum += l;
  const double data = sum / static_cast<double>(losses.size());
  return data + 0.5 * weight_decay * squared_norm(params);
}

LossAndGrad loss_and_grad(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
                          double weight_decay) {
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  validate_inputs(spec, params, batch);
  auto out = kernels::data_loss_and_grad(spec, params, batch);
  out.loss += 0.5 * weight_decay * squared_norm(params);
  axpy(weight_decay, params, out.grad);
  if (!std::isfinite(out.loss)) throw NumericalError("loss: non-finite value");
  check_finite(out.grad, "grad");
  return out;
}

ParamVector grad(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
                 double weight_decay) {
  return loss_and_grad(spec, params, batch, weight_decay).grad;
}

ParamVector hvp(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
                const ParamVector& v, double weight_decay, double fd_step) {
  require_same_dim(params, v, "hvp");
  if (!(fd_step > 0.0)) throw std::invalid_argument("hvp: fd_step must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
  validate_inputs(spec, params, batch);
  if (!v.all_finite()) throw std::invalid_argument("hvp: direction contains non-finite values");

  const double vnorm = norm(v);
  if (vnorm == 0.0) return ParamVector(v.dim());
  const double h = fd_step / vnorm;

  ParamVector plus = params;
  ParamVector minus = params;
  axpy(h, v, plus);
  axpy(-h, v, minus);
  const auto g_plus = kernels::data_loss_and_grad(spec, plus, batch).grad;
  const auto g_minus = kernels::data_loss_and_grad(spec, minus, batch).grad;

  ParamVector out(v.dim());
  for (std::size_t j = 0; j < v.dim(); ++j) {
    out[j] = (g_plus[j] - g_minus[j]) / (2.0 * h) + weight_decay * v[j];
  }
  check_finite(out, "hvp");
  return out;
}

SymmetricMatrix::SymmetricMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) {
    throw std::invalid_argument("SymmetricMatrix: matrix must be square and non-empty");
  }
  double scale = 0.0;
  for (double v : m_.flat()) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * scale;
  for (std::size_t i = 0; i < m_.rows(); ++i) {
    for (std::size_t j = i + 1; j < m_.cols(); ++j) {
      if (std::abs(m_(i, j) - m_(j, i)) > tol) {
        throw std::invalid_argument("SymmetricMatrix: matrix is not symmetric at (" +
                                    std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
}

SymmetricMatrix SymmetricMatrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return SymmetricMatrix(std::move(m));
}

ParamVector SymmetricMatrix::apply(const ParamVector& v) const {
  if (v.dim() != dim()) throw std::invalid_argument("SymmetricMatrix::apply: dimension mismatch");
  ParamVector out(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim(); ++j) s += m_(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

double qloss(const SymmetricMatrix& a, const ParamVector& theta) {
  return 0.5 * dot(theta, a.apply(theta));
}

ParamVector qgrad(const SymmetricMatrix& a, const ParamVector& theta) { return a.apply(theta); }

}  // namespace leaware
