#include "heppcat/baselines.hpp"
#include "heppcat/error.hpp"
#include "heppcat/fitter.hpp"
#include "heppcat/fupdate.hpp"
#include "heppcat/simgen.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace heppcat;
using namespace heppcat::testing;

namespace {

// Plain EM step written with full d x d algebra: F+ = (sum Y M_l ...) per the
// posterior moments of z. Used only as an oracle on tiny instances.
Matrix em_step_reference(const GroupedData& data, const Matrix& F, const Vector& v) {
  const Index d = F.rows(), k = F.cols();
  Matrix A = Matrix::Zero(d, k), B = Matrix::Zero(k, k);
  for (Index l = 0; l < data.num_groups(); ++l) {
    const Matrix& Y = data.block(l);
    const Matrix C = F * F.transpose() + v[l] * Matrix::Identity(d, d);
    const Matrix G = F.transpose() * C.llt().solve(Matrix::Identity(d, d));  // k x d
    const Matrix Ez = G * Y;                                                   // k x n
    const Matrix cov = Matrix::Identity(k, k) - G * F;
    A += Y * Ez.transpose() / v[l];
    B += (Ez * Ez.transpose() + static_cast<double>(data.group_size(l)) * cov) / v[l];
  }
  return A * B.inverse();
}

}  // namespace

TEST_CASE("F update matches the textbook EM step") {
  Rng rng = make_rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const Index d = uniform_int(rng, 3, 9);
    const Index k = uniform_int(rng, 1, d - 1);
    const Index L = uniform_int(rng, 1, 3);
    const GroupedData data = random_grouped(d, L, 1, 12, rng);
    const FactorModel m = random_model(d, k, L, rng);
    const FactorModel next = em_update_F(data, m);
    const Matrix ref = em_step_reference(data, m.F(), m.v());
    CHECK(rel_fro(next.F() * next.F().transpose(), ref * ref.transpose()) < 1e-8);
    CHECK(next.v() == m.v());
  }
}

TEST_CASE("F update ascends the likelihood") {
  Rng rng = make_rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = uniform_int(rng, 3, 15);
    const Index k = uniform_int(rng, 1, std::min<Index>(4, d - 1));
    const Index L = uniform_int(rng, 1, 4);
    const GroupedData data = random_grouped(d, L, 1, 25, rng);
    const FactorModel m = random_model(d, k, L, rng);
    const double before = log_likelihood_parts(data, m);
    const double after = log_likelihood_parts(data, em_update_F(data, m));
    CHECK(after >= before - 1e-9 * (1 + std::abs(before)));
  }
}

TEST_CASE("F update is rotation equivariant") {
  Rng rng = make_rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const GroupedData data = random_grouped(8, 2, 3, 10, rng);
    const Matrix F = random_matrix(8, 3, rng);
    const Vector v = random_positive(2, rng);
    const Matrix Q = Eigen::HouseholderQR<Matrix>(random_matrix(3, 3, rng)).householderQ();
    const Matrix F1 = em_update_F(data, FactorModel::from_factor(F, v)).F();
    const Matrix F2 = em_update_F(data, FactorModel::from_factor(F * Q, v)).F();
    CHECK(rel_fro(F2 * F2.transpose(), F1 * F1.transpose()) < 1e-8);
  }
}

TEST_CASE("F update special cases") {
  Rng rng = make_rng(24);
  SUBCASE("zero factor is a fixed point") {
    const GroupedData data = random_grouped(5, 2, 3, 8, rng);
    const FactorModel m = FactorModel::from_factor(Matrix::Zero(5, 2), Vector::Ones(2));
    CHECK(em_update_F(data, m).F().norm() == 0.0);
  }
  SUBCASE("zero variance is rejected") {
    const GroupedData data = random_grouped(5, 2, 3, 8, rng);
    Vector v = Vector::Ones(2);
    v[1] = 0.0;
    const FactorModel m = FactorModel::from_factor(random_matrix(5, 2, rng), v);
    try {
      em_update_F(data, m);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::numerical);
    }
  }
  SUBCASE("PPCA maximizer is a fixed point for L = 1") {
    const TruthModel t = make_truth(30, (Vector(2) << 3.0, 1.0).finished(), Vector::Ones(1), {400}, 5);
    const GroupedData data = generate(t, 6);
    const FactorModel p = ppca_closed_form(data, 2);
    const FactorModel next = em_update_F(data, p);
    CHECK(rel_fro(next.F() * next.F().transpose(), p.F() * p.F().transpose()) < 1e-8);
  }
  SUBCASE("one update from the PPCA start increases the planted likelihood") {
    const TruthModel t = make_truth(100, (Vector(3) << 4.0, 2.0, 1.0).finished(), (Vector(2) << 1.0, 4.0).finished(),
                                    {200, 800}, 9);
    const GroupedData data = generate(t, 10);
    FactorModel m = init_ppca(data, 3);
    // Move v off the homoscedastic value, where the PPCA factor is already optimal.
    m = m.with_v(t.v);
    CHECK(log_likelihood_parts(data, em_update_F(data, m)) > log_likelihood_parts(data, m));
  }
}

TEST_CASE("Gram compression") {
  Rng rng = make_rng(25);
  SUBCASE("small groups are untouched") {
    const GroupedData data = random_grouped(6, 2, 2, 6, rng);
    const GroupedData c = compress_gram(data);
    for (Index l = 0; l < 2; ++l) CHECK(c.block(l) == data.block(l));
  }
  SUBCASE("Gram matrix is preserved") {
    const Matrix Y = random_matrix(5, 50, rng);
    const GroupedData c = compress_gram(GroupedData({Y}));
    CHECK(c.block(0).cols() == 5);
    CHECK(c.group_size(0) == 50);
    const Matrix G = Y * Y.transpose();
    CHECK((c.block(0) * c.block(0).transpose() - G).norm() <= 1e-9 * G.norm());
  }
  SUBCASE("likelihood and updates are unchanged") {
    for (int trial = 0; trial < 20; ++trial) {
      const GroupedData data = random_grouped(6, 3, 2, 40, rng);
      const GroupedData c = compress_gram(data);
      const FactorModel m = random_model(6, 2, 3, rng);
      CHECK(rel_diff(log_likelihood_parts(c, m), log_likelihood_parts(data, m)) < 1e-10);
      const FactorModel a = em_update_F(data, m), b = em_update_F(c, m);
      CHECK(rel_fro(b.F() * b.F().transpose(), a.F() * a.F().transpose()) < 1e-9);
    }
  }
}
