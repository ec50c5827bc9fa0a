#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "leaware/diffengine.hpp"
#include "leaware/errors.hpp"
#include "leaware/lyapunov.hpp"

using namespace leaware;

namespace {

SymmetricMatrix diag(std::initializer_list<double> d) {
  const std::vector<double> v(d);
  return SymmetricMatrix::diagonal(v);
}

PerturbationState along(ParamVector delta) {
  PerturbationState s;
  s.delta0_norm = norm(delta);
  s.delta = std::move(delta);
  return s;
}

}  // namespace

TEST_CASE("perturbation initialization") {
  const auto s = init_perturbation(50, 1e-6, 3);
  CHECK(norm(s.delta) == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(s.delta0_norm == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(s.steps == 0);
  CHECK(init_perturbation(50, 1e-6, 3).delta == s.delta);
  CHECK_FALSE(init_perturbation(50, 1e-6, 4).delta == s.delta);
  CHECK_THROWS_AS(init_perturbation(0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_perturbation(3, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_perturbation(3, NAN, 1), std::invalid_argument);
}

TEST_CASE("tangent step on an eigenvector stretches by |1 - lr * lambda|") {
  const auto a = diag({0.5, 4.0});
  auto s = along({0.0, 1e-3});
  s = propagate_tangent(std::move(s), a.apply(s.delta), 0.1);
  CHECK(s.log_stretch_sum == doctest::Approx(std::log(0.6)));
  s = propagate_tangent(std::move(s), a.apply(s.delta), 0.1);
  CHECK(le_estimate(s, LeMethod::tangent).value == doctest::Approx(std::log(0.6)));
  CHECK(s.steps == 2);
}

TEST_CASE("renormalization keeps the exponent and counts rescales") {
  const auto a = diag({1.0, 3.0});
  auto banded = along({1e-6, 1e-6});
  auto free = banded;
  for (int t = 0; t < 3000; ++t) {
    banded = propagate_tangent(std::move(banded), a.apply(banded.delta), 0.1);
    free = propagate_tangent(std::move(free), a.apply(free.delta), 0.1, RenormBand::disabled());
  }
  CHECK(free.renorm_count == 0);
  CHECK(banded.renorm_count > 0);
  CHECK(norm(banded.delta) >= 1e-3 * banded.delta0_norm);
  CHECK(le_estimate(banded, LeMethod::tangent).value ==
        doctest::Approx(le_estimate(free, LeMethod::tangent).value).epsilon(1e-12));
  CHECK(le_estimate(free, LeMethod::tangent).value == doctest::Approx(std::log(0.9)).epsilon(1e-3));
}

TEST_CASE("renormalize is a no-op inside the band") {
  auto s = along({3.0, 4.0});
  s.delta = ParamVector{30.0, 40.0};
  const auto kept = renormalize(s);
  CHECK(kept.delta == s.delta);
  CHECK(kept.renorm_count == 0);
  s.delta = ParamVector{3e4, 4e4};
  const auto rescaled = renormalize(s);
  CHECK(norm(rescaled.delta) == doctest::Approx(5.0));
  CHECK(rescaled.renorm_count == 1);
  CHECK(rescaled.log_stretch_sum == s.log_stretch_sum);
}

TEST_CASE("two-trajectory equals tangent propagation on a quadratic") {
  const auto a = diag({0.7, 2.0, 5.0});
  const double lr = 0.3;
  ParamVector theta{1.0, -2.0, 0.5};
  auto tangent = init_perturbation(3, 1e-5, 2);
  TwoTrajectoryStep two{theta, theta + tangent.delta, tangent};
  const GradFn g = [&](const ParamVector& x) { return qgrad(a, x); };
  for (int t = 0; t < 400; ++t) {
    tangent = propagate_tangent(std::move(tangent), a.apply(tangent.delta), lr);
    two = propagate_two_trajectory(two.theta, two.theta_pert, g, lr, std::move(two.state));
  }
  const double lt = le_estimate(tangent, LeMethod::tangent).value;
  const double l2 = le_estimate(two.state, LeMethod::two_trajectory).value;
  CHECK(l2 == doctest::Approx(lt).epsilon(1e-6));
  // Largest |1 - lr * lambda| is 1 - 0.21 = 0.79 from lambda = 0.7.
  CHECK(lt == doctest::Approx(std::log(0.79)).epsilon(1e-2));
}

TEST_CASE("difference form with gradients matches the tangent form on a quadratic") {
  const auto a = diag({1.0, 2.0});
  const ParamVector theta{0.3, 0.4};
  auto s1 = along({1e-4, -2e-4});
  auto s2 = s1;
  s1 = propagate_difference(std::move(s1), qgrad(a, theta), qgrad(a, theta + s1.delta), 0.2);
  s2 = propagate_tangent(std::move(s2), a.apply(s2.delta), 0.2);
  CHECK(s1.log_stretch_sum == doctest::Approx(s2.log_stretch_sum).epsilon(1e-9));
}

TEST_CASE("collapsed perturbation reports minus infinity") {
  const auto a = diag({1.0, 1.0});
  auto s = along({1.0, 2.0});
  s = propagate_tangent(std::move(s), a.apply(s.delta), 1.0);
  CHECK(s.merged);
  CHECK(le_estimate(s, LeMethod::tangent).value == -std::numeric_limits<double>::infinity());
  s = propagate_tangent(std::move(s), a.apply(s.delta), 1.0);
  CHECK(s.steps == 2);
}

TEST_CASE("error paths") {
  PerturbationState empty = along({1.0});
  CHECK_THROWS_AS(le_estimate(empty, LeMethod::tangent), std::invalid_argument);
  CHECK_THROWS_AS(propagate_tangent(empty, ParamVector{1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(propagate_tangent(empty, ParamVector{1.0, 2.0}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(propagate_tangent(empty, ParamVector{INFINITY}, 0.1), NumericalError);
  CHECK(parse_le_method("tangent") == LeMethod::tangent);
  CHECK_THROWS_AS(parse_le_method("qr"), std::invalid_argument);
}

TEST_CASE("LE bounds") {
  const std::vector<double> lrs{0.1, 0.2};
  const std::vector<double> hn{3.0, 2.0};
  const std::vector<double> sn{0.9, 0.8};
  const auto b = le_bounds(lrs, hn, sn);
  CHECK(b.lower == doctest::Approx(0.5 * (std::log(0.7) + std::log(0.6))));
  CHECK(b.upper == doctest::Approx(0.5 * (std::log(0.9) + std::log(0.8))));
  const std::vector<double> big{10.0, 2.0};
  CHECK(le_bounds(lrs, big, sn).lower == -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(le_bounds({}, {}, {}), std::invalid_argument);
  const std::vector<double> shorter{1.0};
  CHECK_THROWS_AS(le_bounds(lrs, shorter, sn), std::invalid_argument);
}

TEST_CASE("operator norms by power iteration") {
  const auto a = diag({1.0, -5.0, 2.0});
  const LinearOp op = [&](const ParamVector& v) { return a.apply(v); };
  CHECK(symmetric_operator_norm(op, 3, 30) == doctest::Approx(5.0).epsilon(1e-6));
  // I - 0.1 A has eigenvalues 0.9, 1.5, 0.8.
  CHECK(step_operator_norm(op, 0.1, 3, 30) == doctest::Approx(1.5).epsilon(1e-6));
  CHECK_THROWS_AS(symmetric_operator_norm(op, 0), std::invalid_argument);
}

TEST_CASE("one-dimensional map exponents") {
  CHECK(map_le({MapKind::logistic, 4.0}, 0.3, 100000).value == doctest::Approx(std::log(2.0)).epsilon(0.02));
  CHECK(map_le({MapKind::linear, 0.5}, 1.0, 10).value == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(map_le({MapKind::linear, -3.0}, 1.0, 50).value == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(map_le({MapKind::tent, 1.5}, 0.2, 5000).value == doctest::Approx(std::log(1.5)).epsilon(1e-12));
  CHECK(map_le({MapKind::logistic, 2.5}, 0.3, 100000).value == doctest::Approx(std::log(0.5)).epsilon(1e-3));
}

TEST_CASE("map validation") {
  CHECK_THROWS_AS(map_le({MapKind::logistic, 4.0}, 0.3, 999), std::invalid_argument);
  CHECK_THROWS_AS(map_le({MapKind::logistic, 4.5}, 0.3, 1000), std::invalid_argument);
  CHECK_THROWS_AS(map_le({MapKind::tent, 2.5}, 0.3, 1000), std::invalid_argument);
  CHECK_THROWS_AS(map_le({MapKind::logistic, 4.0}, 1.5, 1000), std::invalid_argument);
  CHECK_THROWS_AS(map_le({MapKind::linear, 1e300}, 1.0, 10), std::domain_error);
  CHECK(parse_map_kind("tent") == MapKind::tent);
  CHECK_THROWS_AS(parse_map_kind("henon"), std::invalid_argument);
}
