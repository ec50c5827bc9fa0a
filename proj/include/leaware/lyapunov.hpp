#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>

#include "leaware/param_vector.hpp"

namespace leaware {

enum class LeMethod { two_trajectory, tangent };

std::string to_string(LeMethod m);
LeMethod parse_le_method(const std::string& name);

/// Band around the reference magnitude inside which the perturbation is left
/// alone. Outside it the perturbation is rescaled back to the reference.
struct RenormBand {
  double low = 1e-3;
  double high = 1e3;

  /// Never rescale.
  static RenormBand disabled() {
    return {0.0, std::numeric_limits<double>::infinity()};
  }
};

/// Tangent perturbation plus its accumulated log-stretch.
struct PerturbationState {
  ParamVector delta;
  double delta0_norm = 0.0;      ///< reference magnitude ||delta_0||
  double log_stretch_sum = 0.0;  ///< sum of per-step ln(||delta_new|| / ||delta_old||)
  std::int64_t steps = 0;
  std::int64_t renorm_count = 0;
  /// Set when the perturbation collapsed to exactly zero; the LE is then -inf.
  bool merged = false;
};

struct LeEstimate {
  double value = 0.0;  ///< nats per step
  std::int64_t steps = 0;
  LeMethod method = LeMethod::two_trajectory;
};

struct LeBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Seeded random direction scaled to `magnitude`. Throws on dim == 0 or
/// magnitude <= 0.
PerturbationState init_perturbation(std::size_t dim, double magnitude, std::uint64_t seed);

/// Rescales delta to delta0_norm when ||delta|| / delta0_norm leaves the band.
/// The log-stretch sum is untouched; stretch is recorded before rescaling.
PerturbationState renormalize(PerturbationState state, RenormBand band = {});

/// One step of the linearized map: delta <- delta - lr * (H delta).
/// `hvp_of_delta` must be H evaluated at the current parameters applied to
/// state.delta. Throws NumericalError (with ||delta||) on non-finite output.
PerturbationState propagate_tangent(PerturbationState state, const ParamVector& hvp_of_delta,
                                    double lr, RenormBand band = {});

/// One step of the difference form delta <- delta - lr * (g(theta + delta) - g(theta)),
/// given both gradients. Shared by the two-trajectory propagator and the
/// training harness, which already holds g(theta).
PerturbationState propagate_difference(PerturbationState state, const ParamVector& grad_nominal,
                                       const ParamVector& grad_perturbed, double lr,
                                       RenormBand band = {});

using GradFn = std::function<ParamVector(const ParamVector&)>;

struct TwoTrajectoryStep {
  ParamVector theta;
  ParamVector theta_pert;
  PerturbationState state;
};

/// Advances a nominal and a perturbed trajectory with theta <- theta - lr * g(theta).
/// On entry theta_pert must equal theta + state.delta. After renormalization
/// theta_pert is re-centred to theta + delta.
TwoTrajectoryStep propagate_two_trajectory(const ParamVector& theta, const ParamVector& theta_pert,
                                           const GradFn& grad_fn, double lr,
                                           PerturbationState state, RenormBand band = {});

/// Finite-time exponent log_stretch_sum / steps; -inf if the trajectories
/// merged. Throws on steps == 0.
LeEstimate le_estimate(const PerturbationState& state, LeMethod method);

/// Averages of ln(1 - lr_i * ||H_i||) (lower) and ln ||I - lr_i H_i|| (upper).
/// The lower bound is -inf when any 1 - lr_i * ||H_i|| <= 0.
LeBounds le_bounds(std::span<const double> lrs, std::span<const double> hessian_norms,
                   std::span<const double> step_operator_norms);

using LinearOp = std::function<ParamVector(const ParamVector&)>;

/// ||M|| for a symmetric operator, by power iteration on M^T M = M^2.
double symmetric_operator_norm(const LinearOp& op, std::size_t dim, int iterations = 10,
                               std::uint64_t seed = 0);

/// ||I - lr H|| for a symmetric Hessian given through its HVP.
double step_operator_norm(const LinearOp& hvp_op, double lr, std::size_t dim,
                          int iterations = 10, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// One-dimensional maps with known exponents, used to validate the estimator.

enum class MapKind { logistic, tent, linear };

struct MapSpec {
  MapKind kind = MapKind::logistic;
  double parameter = 4.0;  ///< r, mu or a

  double apply(double x) const;
  double derivative(double x) const;
  bool in_domain(double x) const;
};

MapKind parse_map_kind(const std::string& name);

/// Orbit average (1/n) sum ln|f'(x_t)| for t = 0..n-1. Logistic and tent maps
/// need n >= 1000 and x0 in [0, 1]. Throws if the orbit leaves the domain.
LeEstimate map_le(const MapSpec& map, double x0, std::int64_t n_steps);

}  // namespace leaware
