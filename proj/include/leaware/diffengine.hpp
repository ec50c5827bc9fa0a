#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "leaware/matrix.hpp"
#include "leaware/param_vector.hpp"

namespace leaware {

enum class Activation { tanh, relu };
enum class OutputKind { softmax_cross_entropy, mean_squared_error };

std::string to_string(Activation a);
std::string to_string(OutputKind o);
Activation parse_activation(const std::string& name);
OutputKind parse_output(const std::string& name);

/// Offsets of one dense layer inside the flat parameter vector. Weights are
/// stored row-major as fan_out x fan_in, followed by fan_out biases.
struct LayerLayout {
  std::size_t fan_in = 0;
  std::size_t fan_out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

/// Architecture of a fully connected network. Hidden layers use
/// `activation`; the last layer is affine (logits or regression outputs).
struct ModelSpec {
  std::vector<std::size_t> layer_sizes;
  Activation activation = Activation::tanh;
  OutputKind output = OutputKind::softmax_cross_entropy;

  /// Throws std::invalid_argument on fewer than two layers or a zero size.
  void validate() const;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  /// Width of the representation fed into the output layer.
  std::size_t feature_dim() const { return layer_sizes[layer_sizes.size() - 2]; }

  std::vector<LayerLayout> layout() const;
};

std::size_t parameter_count(const ModelSpec& spec);

/// One minibatch. Classification uses `labels`; regression uses `targets`.
struct Batch {
  Matrix inputs;
  std::vector<int> labels;
  Matrix targets;

  std::size_t size() const noexcept { return inputs.rows(); }
};

/// Checks dims, label range and finiteness; throws std::invalid_argument.
void validate_inputs(const ModelSpec& spec, const ParamVector& params, const Batch& batch);

/// Glorot-uniform weights (±sqrt(6/(fan_in+fan_out))), zero biases.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

Matrix forward(const ModelSpec& spec, const ParamVector& params, const Batch& batch);

/// Penultimate activations (the raw inputs for a single-layer network).
Matrix features(const ModelSpec& spec, const ParamVector& params, const Matrix& inputs);

/// Mean data loss plus (weight_decay / 2) * ||params||^2.
/// Cross-entropy: mean of -log softmax(z)_y. MSE: mean of 0.5 * ||z - t||^2.
double loss(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
            double weight_decay);

/// Exact reverse-mode gradient of `loss`, including weight_decay * params.
ParamVector grad(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
                 double weight_decay);

/// Loss and gradient from a single pass.
struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};
LossAndGrad loss_and_grad(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
                          double weight_decay);

inline constexpr double kDefaultHvpStep = 1e-4;

/// Hessian-vector product by central differences of the data gradient along
/// v, with h = fd_step / ||v||. The weight-decay part weight_decay * v is
/// added analytically. Returns zeros for v = 0.
ParamVector hvp(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
                const ParamVector& v, double weight_decay, double fd_step = kDefaultHvpStep);

/// Symmetric matrix stored densely; used by the quadratic fixtures.
class SymmetricMatrix {
 public:
  /// Throws std::invalid_argument if `m` is not square and symmetric.
  explicit SymmetricMatrix(Matrix m);
  static SymmetricMatrix diagonal(std::span<const double> diag);

  std::size_t dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  ParamVector apply(const ParamVector& v) const;

 private:
  Matrix m_;
};

/// 0.5 * theta^T A theta
double qloss(const SymmetricMatrix& a, const ParamVector& theta);
/// A theta
ParamVector qgrad(const SymmetricMatrix& a, const ParamVector& theta);

}  // namespace leaware
