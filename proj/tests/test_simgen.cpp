#include "heppcat/error.hpp"
#include "heppcat/simgen.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace heppcat;
using namespace heppcat::testing;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("Haar orthonormal matrices") {
  const Matrix Q = haar_orthonormal(6, 6, 1);
  CHECK((Q.transpose() * Q - Matrix::Identity(6, 6)).norm() < 1e-12);
  const Matrix U = haar_orthonormal(50, 4, 2);
  CHECK((U.transpose() * U - Matrix::Identity(4, 4)).norm() < 1e-12);
  CHECK(haar_orthonormal(50, 4, 2) == U);
  CHECK(haar_orthonormal(50, 4, 3) != U);
  CHECK_THROWS_AS(haar_orthonormal(3, 4, 1), Error);

  Matrix mean = Matrix::Zero(3, 3);
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const Matrix u = haar_orthonormal(3, 1, s);
    mean += u * u.transpose();
  }
  mean /= 10000.0;
  CHECK((mean - Matrix::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("truth validation") {
  CHECK_THROWS_AS(make_truth(10, vec({1, 2}), vec({1, 0}), {5, 5}, 1), Error);
  CHECK_THROWS_AS(make_truth(10, vec({1, 2}), vec({1, 1}), {5}, 1), Error);
  TruthModel t = make_truth(10, vec({2, 1}), vec({1, 1}), {5, 5}, 1);
  t.feature_blocks = {{{4, 2.0}, {5, 1.0}}, {}};
  CHECK_THROWS_AS(t.validate(), Error);
  t.feature_blocks = {{{4, 2.0}, {6, 1.0}}, {}};
  CHECK_NOTHROW(t.validate());
  CHECK(t.factor().isApprox(t.U * vec({2, 1}).cwiseSqrt().asDiagonal()));
}

TEST_CASE("generation") {
  const TruthModel t = make_truth(100, vec({4, 2, 1}), vec({1, 4}), {200, 800}, 5);
  const GroupedData a = generate(t, 6), b = generate(t, 6), c = generate(t, 7);
  CHECK(a.num_groups() == 2);
  CHECK(a.group_size(0) == 200);
  CHECK(a.group_size(1) == 800);
  CHECK(a.block(1) == b.block(1));
  CHECK(a.block(1) != c.block(1));
  for (Index l = 0; l < 2; ++l) {
    const double ms = a.block(l).squaredNorm() / (100.0 * a.group_size(l));
    const double expected = 7.0 / 100.0 + t.v[l];
    CHECK(std::abs(ms - expected) <= 0.05 * expected);
  }
}

TEST_CASE("noiseless limit stays in the factor span") {
  const TruthModel t = make_truth(20, vec({3, 1}), vec({1e-30}), {50}, 8);
  const GroupedData g = generate(t, 9);
  const Matrix& Y = g.block(0);
  CHECK((Y - t.U * (t.U.transpose() * Y)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("empirical covariance converges") {
  const TruthModel t = make_truth(10, vec({3, 1}), vec({0.5}), {100000}, 10);
  const GroupedData g = generate(t, 11);
  const Matrix& Y = g.block(0);
  const Matrix cov = Y * Y.transpose() / 1e5;
  const Matrix expected = t.factor() * t.factor().transpose() + 0.5 * Matrix::Identity(10, 10);
  CHECK((cov - expected).cwiseAbs().maxCoeff() <= 0.05);
}

TEST_CASE("feature-blocked noise") {
  TruthModel t = make_truth(100, vec({4, 2, 1}), vec({1, 1}), {5000, 5000}, 12);
  t.feature_blocks = {{{20, 4.0}, {80, 9.0}}, {}};
  t.validate();
  const GroupedData g = generate(t, 13);
  const Matrix F = t.factor();
  for (Index l = 0; l < 2; ++l) {
    const Matrix& Y = g.block(l);
    const Vector var = Y.rowwise().squaredNorm() / static_cast<double>(Y.cols());
    for (Index i = 0; i < 100; ++i) {
      const double noise = l == 0 ? (i < 20 ? 4.0 : 9.0) : 1.0;
      const double expected = F.row(i).squaredNorm() + noise;
      CHECK(std::abs(var[i] - expected) <= 0.1 * expected);
    }
  }
}
