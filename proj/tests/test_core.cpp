#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "leaware/matrix.hpp"
#include "leaware/param_vector.hpp"
#include "leaware/rng.hpp"

using namespace leaware;

TEST_CASE("vector arithmetic") {
  const ParamVector a{1.0, -2.0, 3.0};
  const ParamVector b{0.5, 4.0, -1.0};
  CHECK(dot(a, b) == doctest::Approx(0.5 - 8.0 - 3.0));
  CHECK(squared_norm(a) == 14.0);
  CHECK(norm(a) == doctest::Approx(std::sqrt(14.0)));
  CHECK((a + b) == ParamVector{1.5, 2.0, 2.0});
  CHECK((a - b) == ParamVector{0.5, -6.0, 4.0});
  CHECK((2.0 * a) == ParamVector{2.0, -4.0, 6.0});
  ParamVector y = b;
  axpy(-2.0, a, y);
  CHECK(y == ParamVector{-1.5, 8.0, -7.0});
}

TEST_CASE("norm survives extreme magnitudes") {
  CHECK(norm(ParamVector{1e200, 1e200}) == doctest::Approx(std::sqrt(2.0) * 1e200));
  CHECK(norm(ParamVector{3e-200, 4e-200}) == doctest::Approx(5e-200));
  CHECK(norm(ParamVector(4)) == 0.0);
}

TEST_CASE("dimension mismatches are rejected") {
  const ParamVector a(2);
  const ParamVector b(3);
  CHECK_THROWS_AS(dot(a, b), std::invalid_argument);
  CHECK_THROWS_AS(a + b, std::invalid_argument);
  ParamVector y(3);
  CHECK_THROWS_AS(axpy(1.0, a, y), std::invalid_argument);
}

TEST_CASE("finiteness flag") {
  CHECK(ParamVector{1.0, 2.0}.all_finite());
  CHECK_FALSE(ParamVector{1.0, NAN}.all_finite());
  CHECK_FALSE(ParamVector{INFINITY}.all_finite());
}

TEST_CASE("matrix rows") {
  Matrix m;
  const std::vector<double> r0{1.0, 2.0};
  const std::vector<double> r1{3.0, 4.0};
  m.push_row(r0);
  m.push_row(r1);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 2);
  CHECK(m(1, 0) == 3.0);
  CHECK(m.row(0)[1] == 2.0);
  const std::vector<double> bad{1.0};
  CHECK_THROWS_AS(m.push_row(bad), std::invalid_argument);
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>(3)), std::invalid_argument);
}

TEST_CASE("seed streams are distinct and stable") {
  std::set<std::uint64_t> seen;
  for (auto s : {SeedStream::data, SeedStream::init, SeedStream::perturbation,
                 SeedStream::augmentation, SeedStream::batching, SeedStream::subsample,
                 SeedStream::targets}) {
    seen.insert(stream_seed(42, s));
  }
  CHECK(seen.size() == 7);
  CHECK(stream_seed(42, SeedStream::data) == stream_seed(42, SeedStream::data));
  CHECK(stream_seed(42, SeedStream::data) != stream_seed(43, SeedStream::data));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(0, 1) != derive_seed(1, 0));
}
