#pragma once

// Synthetic data under the planted model y = F z + e with F = U diag(lambda)^{1/2}.

#include "heppcat/model.hpp"

#include <cstdint>
#include <vector>

namespace heppcat {

/// Noise variance applied to a contiguous run of features.
struct FeatureBlock {
  Index count;
  double variance;
};

struct TruthModel {
  Matrix U;                 // d x k, orthonormal columns
  Vector lambda;            // length k
  Vector v;                 // length L
  std::vector<Index> group_sizes;
  // Per group: empty means homogeneous noise v_l; otherwise the blocks cover all d features.
  std::vector<std::vector<FeatureBlock>> feature_blocks;

  Index dim() const { return U.rows(); }
  Index rank() const { return U.cols(); }
  Index num_groups() const { return v.size(); }
  Matrix factor() const { return U * lambda.cwiseSqrt().asDiagonal(); }
  FactorModel as_model() const;
  void validate() const;
};

/// Haar-distributed d x k matrix with orthonormal columns: QR of a Gaussian
/// matrix with the signs of diag(R) absorbed into Q.
Matrix haar_orthonormal(Index d, Index k, std::uint64_t seed);

/// Planted truth with Haar U; the usual experiment setup.
TruthModel make_truth(Index d, const Vector& lambda, const Vector& v, std::vector<Index> group_sizes,
                      std::uint64_t seed);

/// Draws one dataset. Group l uses its own random stream derived from (seed, l).
GroupedData generate(const TruthModel& truth, std::uint64_t seed);

}  // namespace heppcat
