#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "leaware/augment.hpp"
#include "leaware/domains.hpp"

using namespace leaware;

namespace {

const ModelSpec kSpec{{2, 8, 2}, Activation::tanh, OutputKind::softmax_cross_entropy};

TransformParams sample_omega() {
  TransformParams w = TransformParams::identity(2);
  w.rotation = 0.4;
  w.scale = 1.3;
  w.shift = {0.2, -0.5};
  w.noise_scale = 0.3;
  w.contrast = 0.8;
  return w;
}

}  // namespace

TEST_CASE("identity transform is exact") {
  const std::vector<double> x{0.123456789, -7.5};
  const auto y = apply_transform(x, TransformParams::identity(2));
  CHECK(y == x);
  CHECK(TransformParams::identity(2).is_identity());
}

TEST_CASE("transform composition by hand") {
  TransformParams w = TransformParams::identity(2);
  w.rotation = std::numbers::pi / 2;
  w.scale = 2.0;
  w.shift = {1.0, 0.0};
  const std::vector<double> x{1.0, 0.0};
  const auto y = apply_transform(x, w);
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(2.0));

  TransformParams c = TransformParams::identity(2);
  c.contrast = 0.5;
  const std::vector<double> z{1.0, 3.0};  // mean 2
  const auto out = apply_transform(z, c);
  CHECK(out[0] == doctest::Approx(1.5));
  CHECK(out[1] == doctest::Approx(2.5));

  TransformParams n = TransformParams::identity(2);
  n.noise_scale = 0.5;
  const std::vector<double> dir{2.0, -4.0};
  const auto noisy = apply_transform(x, n, dir);
  CHECK(noisy[0] == doctest::Approx(2.0));
  CHECK(noisy[1] == doctest::Approx(-2.0));
  CHECK_THROWS_AS(apply_transform(x, n), std::invalid_argument);
}

TEST_CASE("parameter packing and ranges") {
  const auto w = sample_omega();
  const auto packed = w.pack();
  CHECK(packed.size() == TransformParams::param_count(2));
  const auto back = TransformParams::unpack(packed);
  CHECK(back.pack() == packed);

  TransformParams wild = w;
  wild.scale = 50.0;
  wild.contrast = 0.0;
  wild.noise_scale = -1.0;
  CHECK_THROWS_AS(wild.validate(), std::invalid_argument);
  wild.clamp();
  CHECK(wild.scale == 10.0);
  CHECK(wild.contrast == 0.1);
  CHECK(wild.noise_scale == 0.0);
  CHECK_NOTHROW(wild.validate());
}

TEST_CASE("analytic jacobian matches central differences") {
  const auto w = sample_omega();
  const std::vector<double> x{0.7, -1.1};
  const std::vector<double> dir{0.3, 1.2};
  const Matrix jac = transform_jacobian(x, w, dir);
  const auto packed = w.pack();
  const double h = 1e-6;
  for (std::size_t k = 0; k < packed.size(); ++k) {
    auto up = packed;
    auto dn = packed;
    up[k] += h;
    dn[k] -= h;
    const auto yu = apply_transform(x, TransformParams::unpack(up), dir);
    const auto yd = apply_transform(x, TransformParams::unpack(dn), dir);
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(jac(j, k) == doctest::Approx((yu[j] - yd[j]) / (2 * h)).epsilon(1e-7));
    }
  }
}

TEST_CASE("feature distance") {
  const auto p = init_params(kSpec, 1);
  const std::vector<double> x{0.5, 0.5};
  const std::vector<double> y{0.5, -0.5};
  CHECK(feature_distance(kSpec, p, x, x) == 0.0);
  CHECK(feature_distance(kSpec, p, x, y) > 0.0);
  CHECK(feature_distance(kSpec, p, x, y) == doctest::Approx(feature_distance(kSpec, p, y, x)));
}

TEST_CASE("objective at the identity is the plain data loss") {
  const auto d = gen_two_moons(20, 0.1, 2);
  const auto p = init_params(kSpec, 2);
  const auto b = make_batch(d);
  const double j = inner_objective(kSpec, p, b, TransformParams::identity(2), Matrix(20, 2), 3.0);
  CHECK(j == doctest::Approx(loss(kSpec, p, b, 0.0)).epsilon(1e-14));
}

TEST_CASE("adversarial ascent never lowers the objective") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto d = gen_two_moons(32, 0.1, s);
    const auto p = init_params(kSpec, s + 50);
    AugConfig cfg;
    cfg.seed = s;
    const auto r = adversarial_maximize(kSpec, p, make_batch(d), cfg);
    CHECK(r.objective_final >= r.objective_initial);
    CHECK(r.accepted_steps <= cfg.ascent_steps);
    CHECK_NOTHROW(r.omega.validate());
    CHECK(r.batch.labels == d.labels);
    const auto again = adversarial_maximize(kSpec, p, make_batch(d), cfg);
    CHECK(again.batch.inputs == r.batch.inputs);
  }
}

TEST_CASE("larger lambda keeps features closer") {
  const auto d = gen_two_moons(32, 0.1, 4);
  const auto p = init_params(kSpec, 4);
  AugConfig loose;
  loose.lambda = 0.0;
  AugConfig tight;
  tight.lambda = 100.0;
  const auto b = make_batch(d);
  auto mean_dist = [&](const AugmentResult& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      s += feature_distance(kSpec, p, b.inputs.row(i), r.batch.inputs.row(i));
    }
    return s / static_cast<double>(b.size());
  };
  CHECK(mean_dist(adversarial_maximize(kSpec, p, b, tight)) <=
        mean_dist(adversarial_maximize(kSpec, p, b, loose)));
}

TEST_CASE("augmented dataset layout and thread independence") {
  const auto d = gen_two_moons(50, 0.1, 6);
  const auto p = init_params(kSpec, 6);
  AugConfig cfg;
  cfg.samples_per_input = 2;
  cfg.seed = 9;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = augment_dataset(kSpec, p, d, cfg, 16);
  omp_set_num_threads(4);
  const auto b = augment_dataset(kSpec, p, d, cfg, 16);
  omp_set_num_threads(saved);
  CHECK(a.features == b.features);
  CHECK(a.size() == 150);
  CHECK(a.domain == "source_aug");
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(a.labels[i] == d.labels[i]);
    CHECK(a.labels[50 + i] == d.labels[i]);
    CHECK(a.labels[100 + i] == d.labels[i]);
  }
  CHECK_THROWS_AS(augment_dataset(kSpec, p, d, cfg, 0), std::invalid_argument);
}

TEST_CASE("config validation") {
  AugConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.lambda = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.samples_per_input = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.ascent_steps = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
