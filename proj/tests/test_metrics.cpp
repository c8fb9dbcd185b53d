#include "heppcat/error.hpp"
#include "heppcat/metrics.hpp"
#include "heppcat/simgen.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace heppcat;
using namespace heppcat::testing;

namespace {

Matrix orthogonal(Index n, Rng& rng) { return Eigen::HouseholderQR<Matrix>(random_matrix(n, n, rng)).householderQ(); }

}  // namespace

TEST_CASE("factor error") {
  Rng rng = make_rng(1);
  const Matrix F = random_matrix(10, 3, rng);
  CHECK(factor_error(F, F) == 0.0);
  CHECK(factor_error(F * orthogonal(3, rng), F) <= 1e-20);
  CHECK(factor_error(Matrix::Zero(10, 3), F) == doctest::Approx(1.0));
  CHECK(factor_error(2.0 * F, F) == doctest::Approx(9.0));
  try {
    factor_error(F, Matrix::Zero(10, 3));
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
}

TEST_CASE("subspace error") {
  Rng rng = make_rng(2);
  const Matrix Q = orthogonal(8, rng);
  const Matrix U = Q.leftCols(3);
  CHECK(subspace_error(U, U) <= 1e-14);
  CHECK(subspace_error(Q.middleCols(3, 3), U) == doctest::Approx(2.0));
  CHECK(subspace_error(U * orthogonal(3, rng), U) <= 1e-12);
  for (double theta : {0.1, 0.7, 1.3}) {
    Matrix a(2, 1), b(2, 1);
    a << 1, 0;
    b << std::cos(theta), std::sin(theta);
    CHECK(subspace_error(b, a) == doctest::Approx(2 * (1 - std::pow(std::cos(theta), 2))));
  }
  CHECK_THROWS_AS(subspace_error(2.0 * U, U), Error);
  CHECK_THROWS_AS(subspace_error(U, Q.leftCols(2)), Error);
}

TEST_CASE("component recovery") {
  Rng rng = make_rng(3);
  const Matrix Q = orthogonal(6, rng);
  CHECK(component_recovery(Q.leftCols(2), Q.leftCols(2)).isApprox(Vector::Ones(2)));
  CHECK(component_recovery(Q.middleCols(2, 2), Q.leftCols(2)).norm() < 1e-20);
  double mean = 0;
  for (std::uint64_t s = 0; s < 2000; ++s) mean += component_recovery(haar_orthonormal(100, 1, s), haar_orthonormal(100, 1, s + 5000))[0];
  mean /= 2000;
  CHECK(mean == doctest::Approx(0.01).epsilon(0.15));
}

TEST_CASE("NRMSE") {
  Matrix e1(2, 1);
  e1 << 1, 0;
  Matrix y(2, 1);
  y << 1, 1;
  CHECK(nrmse(y, e1) == doctest::Approx(1 / std::sqrt(2.0)));
  Matrix inside(2, 3);
  inside << 1, 2, 3, 0, 0, 0;
  CHECK(nrmse(inside, e1) == 0.0);
  Matrix outside(2, 2);
  outside << 0, 0, 1, 2;
  CHECK(nrmse(outside, e1) == 1.0);
  CHECK_THROWS_AS(nrmse(Matrix::Zero(2, 2), e1), Error);
}

TEST_CASE("relative bias") {
  const std::vector<double> same{2, 2, 2}, twice{4, 4}, sym{1.8, 2.2};
  CHECK(relative_bias(same, 2.0) == 0.0);
  CHECK(relative_bias(twice, 2.0) == 1.0);
  CHECK(relative_bias(sym, 2.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(relative_bias(std::vector<double>{}, 1.0), Error);
}
