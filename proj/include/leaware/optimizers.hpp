#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "leaware/param_vector.hpp"

namespace leaware {

// All step functions are pure: they take the state by value and return the
// updated parameters with the successor state. Weight decay is coupled (the
// caller folds weight_decay * params into `grad`) for every optimizer except
// AdamW, which applies it to the parameters directly.

/// Learning-rate feedback: shrink by exp(-beta * delta_le) when the LE rose,
/// otherwise keep. Never returns less than lr_floor. Throws on non-finite
/// delta_le or lr <= 0.
double adjust_lr(double lr, double delta_le, double beta, double lr_floor);

struct LeAwareConfig {
  double lr0 = 0.05;
  double beta = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double delta_mag = 1e-6;
  /// Iterations per LE window; 0 means one epoch (resolved by the harness).
  std::int64_t le_window = 0;
  double lr_floor = 1e-7;

  void validate() const;
};

struct LrChange {
  std::int64_t step = 0;
  double lr = 0.0;
};

struct LeAwareState {
  double lr = 0.0;
  ParamVector velocity;
  std::optional<double> prev_le;
  std::int64_t step = 0;
  std::vector<LrChange> lr_history;
  std::int64_t floor_hits = 0;  ///< times the floor clipped an adjustment

  static LeAwareState initial(const LeAwareConfig& cfg, std::size_t dim);
};

/// Momentum-SGD step with the current lr, then (if le_now is given and a
/// previous reading exists) the LE feedback on lr.
std::pair<ParamVector, LeAwareState> leaware_step(LeAwareState state, const ParamVector& grad,
                                                  const ParamVector& params,
                                                  std::optional<double> le_now,
                                                  const LeAwareConfig& cfg);

struct SgdConfig {
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
};
struct SgdState {
  ParamVector velocity;
  std::int64_t step = 0;
};
std::pair<ParamVector, SgdState> sgd_step(SgdState state, const ParamVector& grad,
                                          const ParamVector& params, const SgdConfig& cfg);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;
};
struct AdamState {
  ParamVector m;
  ParamVector v;
  std::int64_t step = 0;
};
std::pair<ParamVector, AdamState> adam_step(AdamState state, const ParamVector& grad,
                                            const ParamVector& params, const AdamConfig& cfg);
/// Decoupled decay: params *= (1 - lr * weight_decay) before the Adam update.
/// `grad` must not include the weight-decay term.
std::pair<ParamVector, AdamState> adamw_step(AdamState state, const ParamVector& grad,
                                             const ParamVector& params, const AdamConfig& cfg);

struct RmspropConfig {
  double lr = 1e-3;
  double rho = 0.99;
  double eps = 1e-8;
  double weight_decay = 5e-4;
};
struct RmspropState {
  ParamVector sq_avg;
  std::int64_t step = 0;
};
std::pair<ParamVector, RmspropState> rmsprop_step(RmspropState state, const ParamVector& grad,
                                                  const ParamVector& params,
                                                  const RmspropConfig& cfg);

// ---------------------------------------------------------------------------
// Uniform front end used by the training loop.

enum class OptimizerKind { leaware, sgd, adam, adamw, rmsprop };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer_kind(const std::string& name);

/// Flat hyperparameter set covering every optimizer; fields that do not apply
/// to the selected kind are ignored.
struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::leaware;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double beta = 0.1;
  double lr_floor = 1e-7;
  std::int64_t le_window = 0;
  double delta_mag = 1e-6;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double eps = 1e-8;
  double rho = 0.99;

  void validate() const;
  LeAwareConfig leaware() const;
  SgdConfig sgd() const;
  AdamConfig adam() const;
  RmspropConfig rmsprop() const;
  /// Weight decay the caller must fold into the gradient (0 for AdamW).
  double coupled_weight_decay() const;
};

class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, std::size_t dim);

  /// Updates params in place. `le_now` is only consumed by LEAwareSGD.
  void step(ParamVector& params, const ParamVector& grad, std::optional<double> le_now);

  double lr() const;
  OptimizerKind kind() const noexcept { return cfg_.kind; }
  const OptimizerConfig& config() const noexcept { return cfg_; }
  /// LEAwareSGD lr changes; the single entry {0, lr} for the fixed-rate
  /// optimizers.
  std::vector<LrChange> lr_history() const;
  std::int64_t floor_hits() const;

 private:
  OptimizerConfig cfg_;
  std::variant<LeAwareState, SgdState, AdamState, RmspropState> state_;
};

}  // namespace leaware
