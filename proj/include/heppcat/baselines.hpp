#pragma once

#include "heppcat/model.hpp"

namespace heppcat {

/// Closed-form homoscedastic PPCA on all groups pooled together.
///
/// U = top-k eigenvectors of the pooled sample covariance, lambda_j =
/// max(0, eig_j - mean of the remaining d-k eigenvalues), and that mean is
/// replicated as the noise variance of every group. Throws
/// ErrorKind::degenerate when the residual spectrum vanishes.
FactorModel ppca_closed_form(const GroupedData& data, Index k);

/// Leading k eigenvectors of sum_l w_l Y_l Y_l' (orthonormal, sign-normalized).
Matrix weighted_pca(const GroupedData& data, const Vector& weights, Index k);

}  // namespace heppcat
