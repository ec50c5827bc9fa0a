#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "leaware/diffengine.hpp"
#include "leaware/rng.hpp"

using namespace leaware;

namespace {

Batch random_batch(const ModelSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Batch b;
  b.inputs = Matrix(n, spec.input_dim());
  for (auto& v : b.inputs.flat()) v = normal(rng);
  if (spec.output == OutputKind::softmax_cross_entropy) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(spec.output_dim()) - 1);
    for (std::size_t i = 0; i < n; ++i) b.labels.push_back(pick(rng));
  } else {
    b.targets = Matrix(n, spec.output_dim());
    for (auto& v : b.targets.flat()) v = normal(rng);
  }
  return b;
}

ParamVector random_params(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  ParamVector p(dim);
  for (auto& v : p) v = normal(rng);
  return p;
}

const ModelSpec kSmall{{2, 4, 2}, Activation::tanh, OutputKind::softmax_cross_entropy};

}  // namespace

TEST_CASE("layout and parameter count") {
  CHECK(parameter_count(kSmall) == 2 * 4 + 4 + 4 * 2 + 2);
  const ModelSpec deep{{3, 5, 4, 2}, Activation::relu, OutputKind::mean_squared_error};
  CHECK(parameter_count(deep) == 3 * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2);
  CHECK(deep.feature_dim() == 4);
  CHECK_THROWS_AS(ModelSpec({{3}, Activation::tanh, OutputKind::mean_squared_error}).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec({{3, 0, 2}, Activation::tanh, OutputKind::mean_squared_error}).validate(),
                  std::invalid_argument);
}

TEST_CASE("forward pass matches straight-line evaluation") {
  const ParamVector p = random_params(parameter_count(kSmall), 3);
  const Batch b = random_batch(kSmall, 5, 4);
  const Matrix out = forward(kSmall, p, b);
  // Weights are stored per layer as fan_out x fan_in row-major, then biases.
  const double* w1 = p.data();
  const double* b1 = w1 + 8;
  const double* w2 = b1 + 4;
  const double* b2 = w2 + 8;
  for (std::size_t i = 0; i < b.size(); ++i) {
    double h[4];
    for (int j = 0; j < 4; ++j) {
      h[j] = std::tanh(w1[j * 2] * b.inputs(i, 0) + w1[j * 2 + 1] * b.inputs(i, 1) + b1[j]);
    }
    for (int o = 0; o < 2; ++o) {
      double z = b2[o];
      for (int j = 0; j < 4; ++j) z += w2[o * 4 + j] * h[j];
      CHECK(out(i, o) == doctest::Approx(z).epsilon(1e-14));
    }
    const Matrix f = features(kSmall, p, b.inputs);
    for (int j = 0; j < 4; ++j) CHECK(f(i, j) == doctest::Approx(h[j]).epsilon(1e-14));
  }
}

TEST_CASE("loss conventions") {
  const ParamVector zero(parameter_count(kSmall));
  const Batch b = random_batch(kSmall, 6, 1);
  CHECK(loss(kSmall, zero, b, 0.0) == doctest::Approx(std::log(2.0)));

  const ModelSpec lin{{2, 1}, Activation::tanh, OutputKind::mean_squared_error};
  Batch r;
  r.inputs = Matrix(2, 2, {1.0, 0.0, 0.0, 1.0});
  r.targets = Matrix(2, 1, {1.0, 3.0});
  const ParamVector w{2.0, 0.0, 0.0};  // z = 2 * x0
  // residuals 1 and -3: mean of 0.5 * r^2 = (0.5 + 4.5) / 2
  CHECK(loss(lin, w, r, 0.0) == doctest::Approx(2.5));
  CHECK(loss(lin, w, r, 0.1) == doctest::Approx(2.5 + 0.05 * 4.0));
}

TEST_CASE("gradient matches central differences") {
  const std::vector<ModelSpec> specs = {
      kSmall,
      {{3, 6, 5, 3}, Activation::tanh, OutputKind::softmax_cross_entropy},
      {{2, 7, 2}, Activation::relu, OutputKind::softmax_cross_entropy},
      {{4, 3, 2}, Activation::tanh, OutputKind::mean_squared_error},
  };
  for (const auto& spec : specs) {
    const ParamVector p = random_params(parameter_count(spec), 11);
    const Batch b = random_batch(spec, 7, 12);
    const ParamVector g = grad(spec, p, b, 1e-3);
    const double h = 1e-5;
    for (std::size_t j = 0; j < p.dim(); ++j) {
      ParamVector up = p;
      ParamVector dn = p;
      up[j] += h;
      dn[j] -= h;
      const double fd = (loss(spec, up, b, 1e-3) - loss(spec, dn, b, 1e-3)) / (2 * h);
      CHECK(std::abs(g[j] - fd) <= 1e-7 * std::max(1.0, std::abs(fd)));
    }
    const auto lg = loss_and_grad(spec, p, b, 1e-3);
    CHECK(lg.grad == g);
    CHECK(lg.loss == loss(spec, p, b, 1e-3));
  }
}

TEST_CASE("weight decay enters the gradient linearly") {
  const ParamVector p = random_params(parameter_count(kSmall), 5);
  const Batch b = random_batch(kSmall, 4, 6);
  const ParamVector g0 = grad(kSmall, p, b, 0.0);
  const ParamVector g1 = grad(kSmall, p, b, 0.01);
  for (std::size_t j = 0; j < p.dim(); ++j) {
    CHECK(g1[j] - g0[j] == doctest::Approx(0.01 * p[j]).epsilon(1e-12));
  }
}

TEST_CASE("hvp agrees with a dense finite-difference Hessian") {
  const ModelSpec spec{{2, 5, 3}, Activation::tanh, OutputKind::softmax_cross_entropy};
  const ParamVector p = random_params(parameter_count(spec), 21);
  const Batch b = random_batch(spec, 9, 22);
  const std::size_t d = p.dim();
  // Column j of H from central differences of the gradient along e_j.
  const double h = 1e-5;
  Matrix hess(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    ParamVector up = p;
    ParamVector dn = p;
    up[j] += h;
    dn[j] -= h;
    const ParamVector gu = grad(spec, up, b, 0.0);
    const ParamVector gd = grad(spec, dn, b, 0.0);
    for (std::size_t i = 0; i < d; ++i) hess(i, j) = (gu[i] - gd[i]) / (2 * h);
  }
  const ParamVector v = random_params(d, 23);
  const double wd = 2e-3;
  const ParamVector hv = hvp(spec, p, b, v, wd);
  for (std::size_t i = 0; i < d; ++i) {
    double expect = wd * v[i];
    for (std::size_t j = 0; j < d; ++j) expect += hess(i, j) * v[j];
    CHECK(std::abs(hv[i] - expect) <= 1e-5 * std::max(1.0, std::abs(expect)));
  }
  CHECK(hvp(spec, p, b, ParamVector(d), wd) == ParamVector(d));
}

TEST_CASE("hvp is exact up to rounding for a linear least-squares model") {
  // For z = W x + b with 0.5 * mean ||z - t||^2 the Hessian block of each
  // output row is mean([x;1][x;1]^T), independent of the parameters.
  const ModelSpec lin{{3, 2}, Activation::tanh, OutputKind::mean_squared_error};
  const Batch b = random_batch(lin, 6, 31);
  const ParamVector p = random_params(parameter_count(lin), 32);
  const ParamVector v = random_params(p.dim(), 33);
  const ParamVector hv = hvp(lin, p, b, v, 0.0);
  const std::size_t n = b.size();
  // Parameter order: W (2x3 row-major), then b (2).
  for (std::size_t o = 0; o < 2; ++o) {
    for (std::size_t k = 0; k <= 3; ++k) {
      double expect = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double xk = k < 3 ? b.inputs(i, k) : 1.0;
        double dz = v[6 + o];
        for (std::size_t m = 0; m < 3; ++m) dz += v[o * 3 + m] * b.inputs(i, m);
        expect += xk * dz;
      }
      expect /= static_cast<double>(n);
      const double got = k < 3 ? hv[o * 3 + k] : hv[6 + o];
      CHECK(got == doctest::Approx(expect).epsilon(1e-8));
    }
  }
}

TEST_CASE("initialization") {
  const ModelSpec spec{{3, 10, 4}, Activation::tanh, OutputKind::softmax_cross_entropy};
  const ParamVector a = init_params(spec, 9);
  CHECK(a == init_params(spec, 9));
  CHECK_FALSE(a == init_params(spec, 10));
  const double bound1 = std::sqrt(6.0 / 13.0);
  for (std::size_t j = 0; j < 30; ++j) CHECK(std::abs(a[j]) <= bound1);
  for (std::size_t j = 30; j < 40; ++j) CHECK(a[j] == 0.0);
  const double bound2 = std::sqrt(6.0 / 14.0);
  for (std::size_t j = 40; j < 80; ++j) CHECK(std::abs(a[j]) <= bound2);
  for (std::size_t j = 80; j < 84; ++j) CHECK(a[j] == 0.0);
}

TEST_CASE("input validation") {
  const ParamVector p(parameter_count(kSmall));
  Batch b = random_batch(kSmall, 3, 1);
  CHECK_THROWS_AS(forward(kSmall, ParamVector(3), b), std::invalid_argument);
  b.labels[1] = 2;
  CHECK_THROWS_AS(loss(kSmall, p, b, 0.0), std::invalid_argument);
  b.labels[1] = 0;
  b.inputs(0, 0) = NAN;
  CHECK_THROWS_AS(loss(kSmall, p, b, 0.0), std::invalid_argument);
  Batch wrong = random_batch(kSmall, 3, 1);
  wrong.inputs = Matrix(3, 3);
  CHECK_THROWS_AS(forward(kSmall, p, wrong), std::invalid_argument);
}

TEST_CASE("quadratic helpers") {
  Matrix m(2, 2, {2.0, 1.0, 1.0, 3.0});
  const SymmetricMatrix a(m);
  const ParamVector t{1.0, -1.0};
  CHECK(qgrad(a, t) == ParamVector{1.0, -2.0});
  CHECK(qloss(a, t) == doctest::Approx(0.5 * (2.0 - 2.0 + 3.0)));
  CHECK_THROWS_AS(SymmetricMatrix(Matrix(2, 2, {1.0, 2.0, 0.0, 1.0})), std::invalid_argument);
  CHECK_THROWS_AS(SymmetricMatrix(Matrix(2, 3)), std::invalid_argument);
}
