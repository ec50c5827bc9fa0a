#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "leaware/diffengine.hpp"
#include "leaware/domains.hpp"

namespace leaware {

/// Parameters of the semantic transformation family. Applied in this order:
///   contrast about the per-sample mean, rotation of the (f0, f1) plane,
///   isotropic scale, shift, additive noise along a fixed seeded direction.
struct TransformParams {
  double rotation = 0.0;  ///< radians
  double scale = 1.0;
  std::vector<double> shift;
  double noise_scale = 0.0;
  double contrast = 1.0;

  static constexpr double kMinFactor = 0.1;
  static constexpr double kMaxFactor = 10.0;
  static constexpr double kMaxNoise = 10.0;

  static TransformParams identity(std::size_t dim);

  /// Number of free parameters for `dim`-dimensional inputs: 4 + dim.
  static std::size_t param_count(std::size_t dim) { return 4 + dim; }
  /// Packed as [rotation, scale, shift..., noise_scale, contrast].
  std::vector<double> pack() const;
  static TransformParams unpack(std::span<const double> packed);

  /// Projects scale/contrast into [0.1, 10] and noise_scale into [0, 10].
  void clamp();
  /// Throws std::invalid_argument when a range invariant is violated.
  void validate() const;
  bool is_identity() const;
};

struct AugConfig {
  double lambda = 1.0;
  int ascent_steps = 10;
  double ascent_lr = 0.05;
  int samples_per_input = 1;
  std::uint64_t seed = 0;
  double fd_step = 1e-4;
  int max_halvings = 5;

  void validate() const;
};

/// tau(x; omega). `noise` is the unit-variance direction for the additive
/// noise term; it may be empty when omega.noise_scale == 0.
std::vector<double> apply_transform(std::span<const double> x, const TransformParams& omega,
                                    std::span<const double> noise = {});

/// d tau / d omega, a dim x param_count(dim) matrix in packed-parameter order.
Matrix transform_jacobian(std::span<const double> x, const TransformParams& omega,
                          std::span<const double> noise = {});

/// Squared distance between penultimate activations of x and x_t.
double feature_distance(const ModelSpec& spec, const ParamVector& params,
                        std::span<const double> x, std::span<const double> x_t);

/// Mean over the batch of loss(tau(x; omega), y) - lambda * d(tau(x; omega), x).
/// `noise` is n x dim; data loss only, no weight decay.
double inner_objective(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
                       const TransformParams& omega, const Matrix& noise, double lambda);

struct AugmentResult {
  TransformParams omega;
  Batch batch;
  double objective_initial = 0.0;
  double objective_final = 0.0;
  int accepted_steps = 0;
  /// The objective went non-finite; omega is the last finite iterate.
  bool reverted = false;
};

/// Gradient ascent on inner_objective over omega from the identity, with
/// central-difference gradients and step halving on any decrease. The noise
/// direction is drawn from cfg.seed.
AugmentResult adversarial_maximize(const ModelSpec& spec, const ParamVector& params,
                                   const Batch& batch, const AugConfig& cfg);

/// Splits `data` into consecutive minibatches of `batch_size`, maximizes each
/// one samples_per_input times with distinct seeds, and returns the originals
/// followed by all transformed copies. Tag becomes "<domain>_aug".
DomainDataset augment_dataset(const ModelSpec& spec, const ParamVector& params,
                              const DomainDataset& data, const AugConfig& cfg,
                              std::size_t batch_size);

}  // namespace leaware
