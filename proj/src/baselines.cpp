#include "heppcat/baselines.hpp"

#include "heppcat/error.hpp"

#include <algorithm>
#include <string>

namespace heppcat {

FactorModel ppca_closed_form(const GroupedData& data, Index k) {
  const Index d = data.dim();
  require(k >= 1 && k < d, "rank must satisfy 1 <= k < d (k=" + std::to_string(k) + ", d=" + std::to_string(d) + ")");
  if (data.total_size() < k + 1)
    fail(ErrorKind::degenerate, "need at least k+1 samples for a rank-" + std::to_string(k) + " PPCA fit");

  const Matrix S = data.gram() / static_cast<double>(data.total_size());
  const EigenPairs eig = top_eigen(S, k);
  const double residual = eig.values.tail(d - k).mean();
  const double scale = std::max(eig.values[0], 0.0);
  // Numerically zero residual spectrum: data of rank <= k.
  if (!(residual > 1e-12 * scale) || !(residual > 0.0))
    fail(ErrorKind::degenerate, "residual eigenvalues vanish (mean " + std::to_string(residual) +
                                    "); data rank is at most k");
  const Vector lambda = (eig.values.head(k).array() - residual).cwiseMax(0.0);
  return FactorModel::from_eigen(eig.vectors, lambda, Vector::Constant(data.num_groups(), residual));
}

Matrix weighted_pca(const GroupedData& data, const Vector& weights, Index k) {
  require(weights.size() == data.num_groups(), "one weight per group required");
  require((weights.array() > 0).all() && weights.allFinite(), "weights must be positive and finite");
  require(k >= 1 && k <= data.dim(), "rank out of range");
  const Index d = data.dim();
  Matrix G = Matrix::Zero(d, d);
  for (Index l = 0; l < data.num_groups(); ++l)
    G.selfadjointView<Eigen::Lower>().rankUpdate(data.block(l), weights[l]);
  return top_eigen(G.selfadjointView<Eigen::Lower>(), k).vectors;
}

}  // namespace heppcat
