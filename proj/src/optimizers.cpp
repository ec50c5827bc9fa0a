#include "leaware/optimizers.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "leaware/errors.hpp"

namespace leaware {
namespace {

void check_step_result(const ParamVector& params, std::int64_t step, const char* who) {
  if (!params.all_finite()) {
    std::ostringstream msg;
    msg << who << ": non-finite parameters after step " << step;
    throw NumericalError(msg.str());
  }
}

ParamVector zeros_like(const ParamVector& p) { return ParamVector(p.dim()); }

}  // namespace

double adjust_lr(double lr, double delta_le, double beta, double lr_floor) {
  if (!(lr > 0.0)) throw std::invalid_argument("adjust_lr: lr must be > 0");
  if (!std::isfinite(delta_le)) throw std::invalid_argument("adjust_lr: non-finite delta_le");
  if (delta_le > 0.0) return std::max(lr * std::exp(-beta * delta_le), lr_floor);
  return lr;
}

void LeAwareConfig::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("LeAwareConfig: beta must be > 0");
  if (!(lr_floor >= 0.0)) throw std::invalid_argument("LeAwareConfig: lr_floor must be >= 0");
  if (!(lr0 > lr_floor)) throw std::invalid_argument("LeAwareConfig: lr0 must exceed lr_floor");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("LeAwareConfig: momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("LeAwareConfig: weight_decay must be >= 0");
  if (!(delta_mag > 0.0)) throw std::invalid_argument("LeAwareConfig: delta_mag must be > 0");
  if (le_window < 0) throw std::invalid_argument("LeAwareConfig: le_window must be >= 0");
}

LeAwareState LeAwareState::initial(const LeAwareConfig& cfg, std::size_t dim) {
  LeAwareState s;
  s.lr = cfg.lr0;
  s.velocity = ParamVector(dim);
  s.lr_history.push_back({0, cfg.lr0});
  return s;
}

std::pair<ParamVector, LeAwareState> leaware_step(LeAwareState state, const ParamVector& grad,
                                                  const ParamVector& params,
                                                  std::optional<double> le_now,
                                                  const LeAwareConfig& cfg) {
  require_same_dim(grad, params, "leaware_step");
  if (state.velocity.dim() != params.dim()) state.velocity = zeros_like(params);

  ParamVector next = params;
  for (std::size_t i = 0; i < params.dim(); ++i) {
    state.velocity[i] = cfg.momentum * state.velocity[i] + grad[i];
    next[i] -= state.lr * state.velocity[i];
  }
  ++state.step;
  check_step_result(next, state.step, "leaware_step");

  if (le_now) {
    if (state.prev_le) {
      const double delta_le = *le_now - *state.prev_le;
      const double proposed = delta_le > 0.0 ? state.lr * std::exp(-cfg.beta * delta_le) : state.lr;
      const double lr = adjust_lr(state.lr, delta_le, cfg.beta, cfg.lr_floor);
      if (proposed < cfg.lr_floor) ++state.floor_hits;
      if (lr != state.lr) {
        state.lr = lr;
        state.lr_history.push_back({state.step, lr});
      }
    }
    state.prev_le = *le_now;
  }
  return {std::move(next), std::move(state)};
}

std::pair<ParamVector, SgdState> sgd_step(SgdState state, const ParamVector& grad,
                                          const ParamVector& params, const SgdConfig& cfg) {
  require_same_dim(grad, params, "sgd_step");
  if (state.velocity.dim() != params.dim()) state.velocity = zeros_like(params);
  ParamVector next = params;
  for (std::size_t i = 0; i < params.dim(); ++i) {
    state.velocity[i] = cfg.momentum * state.velocity[i] + grad[i];
    next[i] -= cfg.lr * state.velocity[i];
  }
  ++state.step;
  check_step_result(next, state.step, "sgd_step");
  return {std::move(next), std::move(state)};
}

namespace {

ParamVector adam_update(AdamState& state, const ParamVector& grad, ParamVector next,
                        const AdamConfig& cfg) {
  if (state.m.dim() != next.dim()) {
    state.m = zeros_like(next);
    state.v = zeros_like(next);
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < next.dim(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    next[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
  return next;
}

}  // namespace

std::pair<ParamVector, AdamState> adam_step(AdamState state, const ParamVector& grad,
                                            const ParamVector& params, const AdamConfig& cfg) {
  require_same_dim(grad, params, "adam_step");
  auto next = adam_update(state, grad, params, cfg);
  check_step_result(next, state.step, "adam_step");
  return {std::move(next), std::move(state)};
}

std::pair<ParamVector, AdamState> adamw_step(AdamState state, const ParamVector& grad,
                                             const ParamVector& params, const AdamConfig& cfg) {
  require_same_dim(grad, params, "adamw_step");
  ParamVector decayed = params;
  const double keep = 1.0 - cfg.lr * cfg.weight_decay;
  for (auto& p : decayed) p *= keep;
  auto next = adam_update(state, grad, std::move(decayed), cfg);
  check_step_result(next, state.step, "adamw_step");
  return {std::move(next), std::move(state)};
}

std::pair<ParamVector, RmspropState> rmsprop_step(RmspropState state, const ParamVector& grad,
                                                  const ParamVector& params,
                                                  const RmspropConfig& cfg) {
  require_same_dim(grad, params, "rmsprop_step");
  if (state.sq_avg.dim() != params.dim()) state.sq_avg = zeros_like(params);
  ParamVector next = params;
  for (std::size_t i = 0; i < params.dim(); ++i) {
    const double g = grad[i];
    state.sq_avg[i] = cfg.rho * state.sq_avg[i] + (1.0 - cfg.rho) * g * g;
    next[i] -= cfg.lr * g / (std::sqrt(state.sq_avg[i]) + cfg.eps);
  }
  ++state.step;
  check_step_result(next, state.step, "rmsprop_step");
  return {std::move(next), std::move(state)};
}

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::leaware: return "leaware";
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::adamw: return "adamw";
    case OptimizerKind::rmsprop: return "rmsprop";
  }
  return "?";
}

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "leaware" || name == "leawaresgd") return OptimizerKind::leaware;
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  if (name == "adamw") return OptimizerKind::adamw;
  if (name == "rmsprop") return OptimizerKind::rmsprop;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

void OptimizerConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("optimizer: lr must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("optimizer: weight_decay must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("optimizer: momentum must lie in [0, 1)");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("optimizer: Adam betas must lie in [0, 1)");
  }
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("optimizer: rho must lie in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("optimizer: eps must be > 0");
  if (!(delta_mag > 0.0)) throw std::invalid_argument("optimizer: delta_mag must be > 0");
  if (le_window < 0) throw std::invalid_argument("optimizer: le_window must be >= 0");
  if (kind == OptimizerKind::leaware) leaware().validate();
}

LeAwareConfig OptimizerConfig::leaware() const {
  return {lr, beta, momentum, weight_decay, delta_mag, le_window, lr_floor};
}

SgdConfig OptimizerConfig::sgd() const { return {lr, momentum, weight_decay}; }

AdamConfig OptimizerConfig::adam() const { return {lr, adam_beta1, adam_beta2, eps, weight_decay}; }

RmspropConfig OptimizerConfig::rmsprop() const { return {lr, rho, eps, weight_decay}; }

double OptimizerConfig::coupled_weight_decay() const {
  return kind == OptimizerKind::adamw ? 0.0 : weight_decay;
}

Optimizer::Optimizer(const OptimizerConfig& cfg, std::size_t dim) : cfg_(cfg) {
  cfg_.validate();
  switch (cfg_.kind) {
    case OptimizerKind::leaware: state_ = LeAwareState::initial(cfg_.leaware(), dim); break;
    case OptimizerKind::sgd: state_ = SgdState{ParamVector(dim), 0}; break;
    case OptimizerKind::adam:
    case OptimizerKind::adamw: state_ = AdamState{ParamVector(dim), ParamVector(dim), 0}; break;
    case OptimizerKind::rmsprop: state_ = RmspropState{ParamVector(dim), 0}; break;
  }
}

void Optimizer::step(ParamVector& params, const ParamVector& grad, std::optional<double> le_now) {
  switch (cfg_.kind) {
    case OptimizerKind::leaware: {
      auto [p, s] = leaware_step(std::move(std::get<LeAwareState>(state_)), grad, params, le_now,
                                 cfg_.leaware());
      params = std::move(p);
      state_ = std::move(s);
      break;
    }
    case OptimizerKind::sgd: {
      auto [p, s] = sgd_step(std::move(std::get<SgdState>(state_)), grad, params, cfg_.sgd());
      params = std::move(p);
      state_ = std::move(s);
      break;
    }
    case OptimizerKind::adam: {
      auto [p, s] = adam_step(std::move(std::get<AdamState>(state_)), grad, params, cfg_.adam());
      params = std::move(p);
      state_ = std::move(s);
      break;
    }
    case OptimizerKind::adamw: {
      auto [p, s] = adamw_step(std::move(std::get<AdamState>(state_)), grad, params, cfg_.adam());
      params = std::move(p);
      state_ = std::move(s);
      break;
    }
    case OptimizerKind::rmsprop: {
      auto [p, s] =
          rmsprop_step(std::move(std::get<RmspropState>(state_)), grad, params, cfg_.rmsprop());
      params = std::move(p);
      state_ = std::move(s);
      break;
    }
  }
}

double Optimizer::lr() const {
  if (const auto* s = std::get_if<LeAwareState>(&state_)) return s->lr;
  return cfg_.lr;
}

std::vector<LrChange> Optimizer::lr_history() const {
  if (const auto* s = std::get_if<LeAwareState>(&state_)) return s->lr_history;
  return {{0, cfg_.lr}};
}

std::int64_t Optimizer::floor_hits() const {
  if (const auto* s = std::get_if<LeAwareState>(&state_)) return s->floor_hits;
  return 0;
}

}  // namespace leaware
