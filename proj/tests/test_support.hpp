#pragma once

#include "heppcat/model.hpp"
#include "heppcat/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace heppcat::testing {

inline Matrix random_matrix(Index rows, Index cols, Rng& rng) { return gaussian_matrix(rows, cols, rng); }

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Index uniform_int(Rng& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

/// Gaussian blocks of random sizes in [nmin, nmax].
inline GroupedData random_grouped(Index d, Index L, Index nmin, Index nmax, Rng& rng) {
  std::vector<Matrix> blocks;
  for (Index l = 0; l < L; ++l) blocks.push_back(random_matrix(d, uniform_int(rng, nmin, nmax), rng));
  return GroupedData(std::move(blocks));
}

inline Vector random_positive(Index n, Rng& rng, double lo = 0.2, double hi = 3.0) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

inline FactorModel random_model(Index d, Index k, Index L, Rng& rng) {
  return FactorModel::from_factor(random_matrix(d, k, rng), random_positive(L, rng));
}

/// Random coefficients of a rank-k objective in dimension d. Some eigenvalues
/// are set to zero when `allow_zero_gamma` so J0 can hold more than index 0.
inline VCoefficients random_coefficients(Rng& rng, Index k, Index d, bool allow_zero_gamma = true) {
  Vector alpha = Vector::Ones(k + 1);
  alpha[0] = static_cast<double>(d - k);
  Vector beta(k + 1), gamma(k + 1);
  gamma[0] = 0.0;
  beta[0] = std::pow(10.0, uniform(rng, -2.0, 1.5)) * alpha[0];
  for (Index j = 1; j <= k; ++j) {
    gamma[j] = std::pow(10.0, uniform(rng, -1.0, 1.5));
    beta[j] = std::pow(10.0, uniform(rng, -2.0, 1.5));
  }
  std::sort(gamma.data() + 1, gamma.data() + k + 1, std::greater<>());
  if (allow_zero_gamma && k >= 1 && uniform(rng, 0.0, 1.0) < 0.2) gamma[k] = 0.0;
  return VCoefficients::make(alpha, beta, gamma);
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

inline double rel_fro(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

}  // namespace heppcat::testing
