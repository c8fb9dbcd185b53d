#include "heppcat/simgen.hpp"

#include "heppcat/error.hpp"
#include "heppcat/random.hpp"

#include <cmath>
#include <string>

namespace heppcat {

void TruthModel::validate() const {
  const Index d = dim();
  const Index k = rank();
  require(d >= 1 && k >= 1 && k <= d, "truth needs 1 <= k <= d");
  require(lambda.size() == k, "truth lambda length must equal k");
  require((lambda.array() >= 0).all(), "truth lambda must be nonnegative");
  require(v.size() >= 1 && static_cast<std::size_t>(v.size()) == group_sizes.size(),
          "one variance per group required");
  require((v.array() > 0).all() && v.allFinite(), "noise variances must be positive");
  for (Index n : group_sizes) require(n >= 1, "group sizes must be positive");
  require(feature_blocks.empty() || feature_blocks.size() == group_sizes.size(),
          "feature blocks must be given for every group or none");
  for (std::size_t l = 0; l < feature_blocks.size(); ++l) {
    if (feature_blocks[l].empty()) continue;
    Index total = 0;
    for (const auto& b : feature_blocks[l]) {
      require(b.count >= 1 && b.variance > 0, "feature blocks need positive counts and variances");
      total += b.count;
    }
    require(total == d, "feature blocks of group " + std::to_string(l) + " cover " +
                            std::to_string(total) + " features, expected " + std::to_string(d));
  }
}

FactorModel TruthModel::as_model() const {
  return FactorModel::from_factor(factor(), v);
}

Matrix haar_orthonormal(Index d, Index k, std::uint64_t seed) {
  require(k >= 1 && k <= d, "haar_orthonormal needs 1 <= k <= d");
  Rng rng = make_rng(seed, 0x4a4a);
  const Matrix G = gaussian_matrix(d, k, rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(d, k);
  const auto R = qr.matrixQR();
  for (Index j = 0; j < k; ++j)
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  return Q;
}

TruthModel make_truth(Index d, const Vector& lambda, const Vector& v, std::vector<Index> group_sizes,
                      std::uint64_t seed) {
  TruthModel t;
  t.U = haar_orthonormal(d, lambda.size(), seed);
  t.lambda = lambda;
  t.v = v;
  t.group_sizes = std::move(group_sizes);
  t.validate();
  return t;
}

GroupedData generate(const TruthModel& truth, std::uint64_t seed) {
  truth.validate();
  const Index d = truth.dim();
  const Matrix F = truth.factor();
  std::vector<Matrix> blocks;
  blocks.reserve(truth.group_sizes.size());
  for (std::size_t l = 0; l < truth.group_sizes.size(); ++l) {
    const Index n = truth.group_sizes[l];
    Rng rng = make_rng(seed, 0x9e11, l);
    const Matrix Z = gaussian_matrix(truth.rank(), n, rng);
    Matrix E = gaussian_matrix(d, n, rng);
    if (!truth.feature_blocks.empty() && !truth.feature_blocks[l].empty()) {
      Index row = 0;
      for (const auto& b : truth.feature_blocks[l]) {
        E.middleRows(row, b.count) *= std::sqrt(b.variance);
        row += b.count;
      }
    } else {
      E *= std::sqrt(truth.v[static_cast<Index>(l)]);
    }
    blocks.push_back(F * Z + E);
  }
  return GroupedData(std::move(blocks));
}

}  // namespace heppcat
