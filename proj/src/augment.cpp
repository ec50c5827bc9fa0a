#include "leaware/augment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "leaware/errors.hpp"
#include "leaware/kernels.hpp"
#include "leaware/rng.hpp"

namespace leaware {

TransformParams TransformParams::identity(std::size_t dim) {
  TransformParams t;
  t.shift.assign(dim, 0.0);
  return t;
}

std::vector<double> TransformParams::pack() const {
  std::vector<double> p;
  p.reserve(4 + shift.size());
  p.push_back(rotation);
  p.push_back(scale);
  p.insert(p.end(), shift.begin(), shift.end());
  p.push_back(noise_scale);
  p.push_back(contrast);
  return p;
}

TransformParams TransformParams::unpack(std::span<const double> packed) {
  if (packed.size() < 4) throw std::invalid_argument("TransformParams::unpack: too few values");
  TransformParams t;
  t.rotation = packed[0];
  t.scale = packed[1];
  t.shift.assign(packed.begin() + 2, packed.end() - 2);
  t.noise_scale = packed[packed.size() - 2];
  t.contrast = packed[packed.size() - 1];
  return t;
}

void TransformParams::clamp() {
  scale = std::clamp(scale, kMinFactor, kMaxFactor);
  contrast = std::clamp(contrast, kMinFactor, kMaxFactor);
  noise_scale = std::clamp(noise_scale, 0.0, kMaxNoise);
}

void TransformParams::validate() const {
  if (!(scale >= kMinFactor && scale <= kMaxFactor)) {
    throw std::invalid_argument("TransformParams: scale outside [0.1, 10]");
  }
  if (!(contrast >= kMinFactor && contrast <= kMaxFactor)) {
    throw std::invalid_argument("TransformParams: contrast outside [0.1, 10]");
  }
  if (!(noise_scale >= 0.0 && noise_scale <= kMaxNoise)) {
    throw std::invalid_argument("TransformParams: noise_scale outside [0, 10]");
  }
  if (!std::isfinite(rotation)) throw std::invalid_argument("TransformParams: non-finite rotation");
  for (double s : shift) {
    if (!std::isfinite(s)) throw std::invalid_argument("TransformParams: non-finite shift");
  }
}

bool TransformParams::is_identity() const {
  return rotation == 0.0 && scale == 1.0 && noise_scale == 0.0 && contrast == 1.0 &&
         std::all_of(shift.begin(), shift.end(), [](double s) { return s == 0.0; });
}

void AugConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("AugConfig: lambda must be >= 0");
  if (ascent_steps < 0) throw std::invalid_argument("AugConfig: ascent_steps must be >= 0");
  if (!(ascent_lr > 0.0)) throw std::invalid_argument("AugConfig: ascent_lr must be > 0");
  if (samples_per_input < 1) throw std::invalid_argument("AugConfig: samples_per_input must be >= 1");
  if (!(fd_step > 0.0)) throw std::invalid_argument("AugConfig: fd_step must be > 0");
  if (max_halvings < 0) throw std::invalid_argument("AugConfig: max_halvings must be >= 0");
}

namespace {

// No range checks: finite-difference probes may step just outside the box.
void transform_into(std::span<const double> x, const TransformParams& w,
                    std::span<const double> noise, std::span<double> y) {
  const std::size_t d = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(d);
  const double keep = 1.0 - w.contrast;
  for (std::size_t j = 0; j < d; ++j) y[j] = w.contrast * x[j] + keep * mean;
  if (d >= 2) {
    const double c = std::cos(w.rotation);
    const double s = std::sin(w.rotation);
    const double a = y[0];
    const double b = y[1];
    y[0] = c * a - s * b;
    y[1] = s * a + c * b;
  }
  for (std::size_t j = 0; j < d; ++j) {
    y[j] = w.scale * y[j] + w.shift[j];
    if (!noise.empty()) y[j] += w.noise_scale * noise[j];
  }
}

void check_shapes(std::span<const double> x, const TransformParams& omega,
                  std::span<const double> noise) {
  if (x.empty()) throw std::invalid_argument("apply_transform: empty input");
  if (omega.shift.size() != x.size()) {
    throw std::invalid_argument("apply_transform: shift has wrong dimension");
  }
  if (!noise.empty() && noise.size() != x.size()) {
    throw std::invalid_argument("apply_transform: noise direction has wrong dimension");
  }
  if (noise.empty() && omega.noise_scale != 0.0) {
    throw std::invalid_argument("apply_transform: noise_scale > 0 needs a noise direction");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("apply_transform: non-finite input");
  }
}

Matrix transform_batch(const Matrix& inputs, const TransformParams& w, const Matrix& noise) {
  Matrix out(inputs.rows(), inputs.cols());
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    transform_into(inputs.row(i), w, noise.row(i), out.row(i));
  }
  return out;
}

struct Objective {
  const ModelSpec& spec;
  const ParamVector& params;
  const Batch& batch;
  const Matrix& noise;
  const Matrix& base_features;
  double lambda;

  double operator()(const TransformParams& w) const {
    Batch moved;
    moved.inputs = transform_batch(batch.inputs, w, noise);
    moved.labels = batch.labels;
    moved.targets = batch.targets;
    if (!moved.inputs.all_finite()) return std::numeric_limits<double>::quiet_NaN();
    const auto losses = kernels::sample_losses(spec, params, moved);
    double dist_sum = 0.0;
    if (lambda != 0.0) {
      const auto feats = kernels::features(spec, params, moved.inputs);
      for (std::size_t i = 0; i < feats.rows(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < feats.cols(); ++k) {
          const double r = feats(i, k) - base_features(i, k);
          s += r * r;
        }
        dist_sum += s;
      }
    }
    double loss_sum = 0.0;
    for (double l : losses) loss_sum += l;
    const double n = static_cast<double>(losses.size());
    return loss_sum / n - lambda * (dist_sum / n);
  }
};

Matrix draw_noise(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix noise(rows, cols);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : noise.flat()) v = normal(rng);
  return noise;
}

}  // namespace

std::vector<double> apply_transform(std::span<const double> x, const TransformParams& omega,
                                    std::span<const double> noise) {
  omega.validate();
  check_shapes(x, omega, noise);
  std::vector<double> y(x.size());
  transform_into(x, omega, noise, y);
  return y;
}

Matrix transform_jacobian(std::span<const double> x, const TransformParams& omega,
                          std::span<const double> noise) {
  omega.validate();
  check_shapes(x, omega, noise);
  const std::size_t d = x.size();
  const std::size_t m = TransformParams::param_count(d);
  Matrix jac(d, m);

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(d);
  // After contrast.
  std::vector<double> u(d);
  std::vector<double> du_dc(d);
  for (std::size_t j = 0; j < d; ++j) {
    u[j] = omega.contrast * x[j] + (1.0 - omega.contrast) * mean;
    du_dc[j] = x[j] - mean;
  }
  // After rotation; dr_dc is the rotated contrast derivative.
  std::vector<double> r = u;
  std::vector<double> dr_dc = du_dc;
  std::vector<double> dr_drot(d, 0.0);
  if (d >= 2) {
    const double c = std::cos(omega.rotation);
    const double s = std::sin(omega.rotation);
    r[0] = c * u[0] - s * u[1];
    r[1] = s * u[0] + c * u[1];
    dr_dc[0] = c * du_dc[0] - s * du_dc[1];
    dr_dc[1] = s * du_dc[0] + c * du_dc[1];
    dr_drot[0] = -s * u[0] - c * u[1];
    dr_drot[1] = c * u[0] - s * u[1];
  }
  for (std::size_t j = 0; j < d; ++j) {
    jac(j, 0) = omega.scale * dr_drot[j];
    jac(j, 1) = r[j];
    jac(j, 2 + j) = 1.0;
    jac(j, 2 + d) = noise.empty() ? 0.0 : noise[j];
    jac(j, 3 + d) = omega.scale * dr_dc[j];
  }
  return jac;
}

double feature_distance(const ModelSpec& spec, const ParamVector& params,
                        std::span<const double> x, std::span<const double> x_t) {
  if (x.size() != x_t.size()) throw std::invalid_argument("feature_distance: dimension mismatch");
  Matrix both(2, x.size());
  std::copy(x.begin(), x.end(), both.row(0).begin());
  std::copy(x_t.begin(), x_t.end(), both.row(1).begin());
  const auto f = features(spec, params, both);
  double s = 0.0;
  for (std::size_t k = 0; k < f.cols(); ++k) {
    const double r = f(0, k) - f(1, k);
    s += r * r;
  }
  return s;
}

double inner_objective(const ModelSpec& spec, const ParamVector& params, const Batch& batch,
                       const TransformParams& omega, const Matrix& noise, double lambda) {
  validate_inputs(spec, params, batch);
  if (noise.rows() != batch.size() || noise.cols() != batch.inputs.cols()) {
    throw std::invalid_argument("inner_objective: noise must be n x dim");
  }
  if (omega.shift.size() != batch.inputs.cols()) {
    throw std::invalid_argument("inner_objective: shift has wrong dimension");
  }
  const auto base = kernels::features(spec, params, batch.inputs);
  return Objective{spec, params, batch, noise, base, lambda}(omega);
}

AugmentResult adversarial_maximize(const ModelSpec& spec, const ParamVector& params,
                                   const Batch& batch, const AugConfig& cfg) {
  cfg.validate();
  validate_inputs(spec, params, batch);
  const std::size_t d = batch.inputs.cols();
  const Matrix noise = draw_noise(batch.size(), d, cfg.seed);
  const Matrix base = kernels::features(spec, params, batch.inputs);
  const Objective objective{spec, params, batch, noise, base, cfg.lambda};

  AugmentResult res;
  res.omega = TransformParams::identity(d);
  double current = objective(res.omega);
  if (!std::isfinite(current)) throw NumericalError("adversarial_maximize: non-finite objective at identity");
  res.objective_initial = current;

  double step = cfg.ascent_lr;
  auto packed = res.omega.pack();
  std::vector<double> gradient(packed.size());
  for (int k = 0; k < cfg.ascent_steps; ++k) {
    bool finite = true;
    for (std::size_t j = 0; j < packed.size(); ++j) {
      auto probe = packed;
      probe[j] = packed[j] + cfg.fd_step;
      const double up = objective(TransformParams::unpack(probe));
      probe[j] = packed[j] - cfg.fd_step;
      const double down = objective(TransformParams::unpack(probe));
      gradient[j] = (up - down) / (2.0 * cfg.fd_step);
      if (!std::isfinite(gradient[j])) finite = false;
    }
    if (!finite) {
      res.reverted = true;
      break;
    }
    if (std::all_of(gradient.begin(), gradient.end(), [](double g) { return g == 0.0; })) break;

    bool accepted = false;
    for (int halvings = 0; halvings <= cfg.max_halvings; ++halvings) {
      std::vector<double> trial(packed.size());
      for (std::size_t j = 0; j < packed.size(); ++j) trial[j] = packed[j] + step * gradient[j];
      auto w = TransformParams::unpack(trial);
      w.clamp();
      const double value = objective(w);
      if (!std::isfinite(value)) {
        res.reverted = true;
        break;
      }
      if (value >= current) {
        packed = w.pack();
        current = value;
        accepted = true;
        break;
      }
      if (halvings < cfg.max_halvings) step *= 0.5;
    }
    if (!accepted) break;
    ++res.accepted_steps;
  }

  res.omega = TransformParams::unpack(packed);
  res.objective_final = current;
  res.batch.inputs = transform_batch(batch.inputs, res.omega, noise);
  res.batch.labels = batch.labels;
  res.batch.targets = batch.targets;
  return res;
}

DomainDataset augment_dataset(const ModelSpec& spec, const ParamVector& params,
                              const DomainDataset& data, const AugConfig& cfg,
                              std::size_t batch_size) {
  cfg.validate();
  data.validate();
  if (batch_size == 0) throw std::invalid_argument("augment_dataset: batch_size must be >= 1");

  const std::size_t n = data.size();
  const std::size_t chunks = (n + batch_size - 1) / batch_size;
  const auto copies = static_cast<std::size_t>(cfg.samples_per_input);
  const std::size_t tasks = chunks * copies;

  DomainDataset out;
  out.features = Matrix(n * (1 + copies), data.dim());
  out.labels.resize(n * (1 + copies));
  out.domain = data.domain + "_aug";
  out.seed = cfg.seed;
  out.num_classes = data.num_classes;
  std::copy(data.features.flat().begin(), data.features.flat().end(), out.features.flat().begin());
  std::copy(data.labels.begin(), data.labels.end(), out.labels.begin());

  // Tasks write disjoint row ranges, so the output does not depend on
  // scheduling.
  std::vector<std::string> errors(tasks);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t t = 0; t < tasks; ++t) {
    try {
      const std::size_t copy = t / chunks;
      const std::size_t chunk = t % chunks;
      const std::size_t begin = chunk * batch_size;
      const std::size_t end = std::min(n, begin + batch_size);
      std::vector<std::size_t> idx(end - begin);
      for (std::size_t r = 0; r < idx.size(); ++r) idx[r] = begin + r;
      AugConfig task_cfg = cfg;
      task_cfg.seed = derive_seed(cfg.seed, t);
      const auto res = adversarial_maximize(spec, params, make_batch(data, idx), task_cfg);
      const std::size_t dst = n * (1 + copy) + begin;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        std::copy_n(res.batch.inputs.row(r).begin(), data.dim(), out.features.row(dst + r).begin());
        out.labels[dst + r] = res.batch.labels[r];
      }
    } catch (const std::exception& e) {
      errors[t] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw NumericalError("augment_dataset: " + e);
  }
  return out;
}

}  // namespace leaware
