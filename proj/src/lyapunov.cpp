#include "leaware/lyapunov.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "leaware/errors.hpp"
#include "leaware/rng.hpp"

namespace leaware {

std::string to_string(LeMethod m) {
  return m == LeMethod::tangent ? "tangent" : "two_trajectory";
}

LeMethod parse_le_method(const std::string& name) {
  if (name == "tangent") return LeMethod::tangent;
  if (name == "two_trajectory" || name == "two-trajectory") return LeMethod::two_trajectory;
  throw std::invalid_argument("unknown LE method '" + name + "'");
}

PerturbationState init_perturbation(std::size_t dim, double magnitude, std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("init_perturbation: dim must be >= 1");
  if (!(magnitude > 0.0) || !std::isfinite(magnitude)) {
    throw std::invalid_argument("init_perturbation: magnitude must be finite and > 0");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ParamVector dir(dim);
  double n = 0.0;
  while (n == 0.0) {
    for (auto& v : dir) v = normal(rng);
    n = norm(dir);
  }
  PerturbationState state;
  state.delta = ParamVector(dim);
  for (std::size_t i = 0; i < dim; ++i) state.delta[i] = dir[i] / n * magnitude;
  state.delta0_norm = magnitude;
  return state;
}

PerturbationState renormalize(PerturbationState state, RenormBand band) {
  if (state.merged) return state;
  const double n = norm(state.delta);
  if (!(n > 0.0)) return state;
  const double ratio = n / state.delta0_norm;
  if (ratio >= band.low && ratio <= band.high) return state;
  const double s = state.delta0_norm / n;
  for (auto& v : state.delta) v *= s;
  ++state.renorm_count;
  return state;
}

namespace {

// Records the stretch from old_norm to the new delta already stored in state.
PerturbationState record_step(PerturbationState state, double old_norm, RenormBand band) {
  ++state.steps;
  const double new_norm = norm(state.delta);
  if (new_norm == 0.0) {
    state.merged = true;
    return state;
  }
  state.log_stretch_sum += std::log(new_norm / old_norm);
  return renormalize(std::move(state), band);
}

}  // namespace

PerturbationState propagate_tangent(PerturbationState state, const ParamVector& hvp_of_delta,
                                    double lr, RenormBand band) {
  require_same_dim(state.delta, hvp_of_delta, "propagate_tangent");
  if (!(lr > 0.0)) throw std::invalid_argument("propagate_tangent: lr must be > 0");
  if (state.merged) {
    ++state.steps;
    return state;
  }
  const double old_norm = norm(state.delta);
  axpy(-lr, hvp_of_delta, state.delta);
  if (!state.delta.all_finite()) {
    std::ostringstream msg;
    msg << "propagate_tangent: non-finite perturbation at step " << state.steps + 1
        << " (||delta|| before step = " << old_norm << ")";
    throw NumericalError(msg.str());
  }
  return record_step(std::move(state), old_norm, band);
}

PerturbationState propagate_difference(PerturbationState state, const ParamVector& grad_nominal,
                                       const ParamVector& grad_perturbed, double lr,
                                       RenormBand band) {
  require_same_dim(state.delta, grad_nominal, "propagate_difference");
  require_same_dim(state.delta, grad_perturbed, "propagate_difference");
  if (!(lr > 0.0)) throw std::invalid_argument("propagate_difference: lr must be > 0");
  if (state.merged) {
    ++state.steps;
    return state;
  }
  const double old_norm = norm(state.delta);
  for (std::size_t i = 0; i < state.delta.dim(); ++i) {
    state.delta[i] -= lr * (grad_perturbed[i] - grad_nominal[i]);
  }
  if (!state.delta.all_finite()) {
    std::ostringstream msg;
    msg << "propagate_difference: non-finite perturbation at step " << state.steps + 1
        << " (||delta|| before step = " << old_norm << ")";
    throw NumericalError(msg.str());
  }
  return record_step(std::move(state), old_norm, band);
}

TwoTrajectoryStep propagate_two_trajectory(const ParamVector& theta, const ParamVector& theta_pert,
                                           const GradFn& grad_fn, double lr,
                                           PerturbationState state, RenormBand band) {
  require_same_dim(theta, theta_pert, "propagate_two_trajectory");
  require_same_dim(theta, state.delta, "propagate_two_trajectory");
  if (!(lr > 0.0)) throw std::invalid_argument("propagate_two_trajectory: lr must be > 0");

  TwoTrajectoryStep out{theta, theta_pert, {}};
  axpy(-lr, grad_fn(theta), out.theta);
  axpy(-lr, grad_fn(theta_pert), out.theta_pert);
  if (!out.theta.all_finite() || !out.theta_pert.all_finite()) {
    std::ostringstream msg;
    msg << "propagate_two_trajectory: non-finite trajectory at step " << state.steps + 1
        << " (||delta|| = " << norm(state.delta) << ")";
    throw NumericalError(msg.str());
  }

  if (state.merged) {
    ++state.steps;
    out.state = std::move(state);
    return out;
  }
  const double old_norm = norm(state.delta);
  state.delta = out.theta_pert - out.theta;
  const auto renorms_before = state.renorm_count;
  out.state = record_step(std::move(state), old_norm, band);
  if (out.state.renorm_count != renorms_before) out.theta_pert = out.theta + out.state.delta;
  return out;
}

LeEstimate le_estimate(const PerturbationState& state, LeMethod method) {
  if (state.steps <= 0) throw std::invalid_argument("le_estimate: no propagation steps yet");
  LeEstimate e;
  e.steps = state.steps;
  e.method = method;
  e.value = state.merged ? -std::numeric_limits<double>::infinity()
                         : state.log_stretch_sum / static_cast<double>(state.steps);
  return e;
}

LeBounds le_bounds(std::span<const double> lrs, std::span<const double> hessian_norms,
                   std::span<const double> step_operator_norms) {
  if (lrs.empty()) throw std::invalid_argument("le_bounds: need at least one step");
  if (lrs.size() != hessian_norms.size() || lrs.size() != step_operator_norms.size()) {
    throw std::invalid_argument("le_bounds: length mismatch");
  }
  const double n = static_cast<double>(lrs.size());
  double lower = 0.0;
  double upper = 0.0;
  bool lower_degenerate = false;
  for (std::size_t i = 0; i < lrs.size(); ++i) {
    const double arg = 1.0 - lrs[i] * hessian_norms[i];
    if (arg <= 0.0) {
      lower_degenerate = true;
    } else {
      lower += std::log(arg);
    }
    upper += std::log(step_operator_norms[i]);
  }
  LeBounds b;
  b.lower = lower_degenerate ? -std::numeric_limits<double>::infinity() : lower / n;
  b.upper = upper / n;
  return b;
}

double symmetric_operator_norm(const LinearOp& op, std::size_t dim, int iterations,
                               std::uint64_t seed) {
  if (dim == 0) throw std::invalid_argument("symmetric_operator_norm: dim must be >= 1");
  auto v = init_perturbation(dim, 1.0, seed).delta;
  for (int k = 0; k < iterations; ++k) {
    auto w = op(op(v));
    const double n = norm(w);
    if (n == 0.0) return 0.0;
    for (auto& x : w) x /= n;
    v = std::move(w);
  }
  return norm(op(v));
}

double step_operator_norm(const LinearOp& hvp_op, double lr, std::size_t dim, int iterations,
                          std::uint64_t seed) {
  const LinearOp step = [&](const ParamVector& v) {
    auto out = v;
    axpy(-lr, hvp_op(v), out);
    return out;
  };
  return symmetric_operator_norm(step, dim, iterations, seed);
}

double MapSpec::apply(double x) const {
  switch (kind) {
    case MapKind::logistic: return parameter * x * (1.0 - x);
    case MapKind::tent: return parameter * std::min(x, 1.0 - x);
    case MapKind::linear: return parameter * x;
  }
  return x;
}

double MapSpec::derivative(double x) const {
  switch (kind) {
    case MapKind::logistic: return parameter * (1.0 - 2.0 * x);
    case MapKind::tent: return x < 0.5 ? parameter : -parameter;
    case MapKind::linear: return parameter;
  }
  return 1.0;
}

bool MapSpec::in_domain(double x) const {
  if (!std::isfinite(x)) return false;
  if (kind == MapKind::linear) return true;
  return x >= 0.0 && x <= 1.0;
}

MapKind parse_map_kind(const std::string& name) {
  if (name == "logistic") return MapKind::logistic;
  if (name == "tent") return MapKind::tent;
  if (name == "linear") return MapKind::linear;
  throw std::invalid_argument("unknown map '" + name + "' (expected logistic, tent or linear)");
}

LeEstimate map_le(const MapSpec& map, double x0, std::int64_t n_steps) {
  if (n_steps < 1) throw std::invalid_argument("map_le: n_steps must be >= 1");
  switch (map.kind) {
    case MapKind::logistic:
      if (!(map.parameter > 0.0 && map.parameter <= 4.0)) {
        throw std::invalid_argument("map_le: logistic r must lie in (0, 4]");
      }
      break;
    case MapKind::tent:
      if (!(map.parameter > 0.0 && map.parameter <= 2.0)) {
        throw std::invalid_argument("map_le: tent mu must lie in (0, 2]");
      }
      break;
    case MapKind::linear:
      if (!std::isfinite(map.parameter)) throw std::invalid_argument("map_le: a must be finite");
      break;
  }
  if (map.kind != MapKind::linear && n_steps < 1000) {
    throw std::invalid_argument("map_le: logistic and tent maps need n_steps >= 1000");
  }
  if (!map.in_domain(x0)) throw std::invalid_argument("map_le: x0 outside the map's domain");

  double x = x0;
  double sum = 0.0;
  for (std::int64_t t = 0; t < n_steps; ++t) {
    sum += std::log(std::abs(map.derivative(x)));
    x = map.apply(x);
    if (!map.in_domain(x)) {
      throw std::domain_error("map_le: orbit left the domain at step " + std::to_string(t + 1));
    }
  }
  LeEstimate e;
  e.value = sum / static_cast<double>(n_steps);
  e.steps = n_steps;
  e.method = LeMethod::tangent;
  return e;
}

}  // namespace leaware
