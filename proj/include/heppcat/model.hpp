#pragma once

// Heteroscedastic PPCA model: samples y = F z + e, e ~ N(0, v_l I) for group l.
//
// The log-likelihood drops the ln(2 pi) constants and uses the natural log,
// so values reported here differ from a full Gaussian log-density by exactly
// -(n d / 2) ln(2 pi).

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace heppcat {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Samples split into L noise groups; block l is d x n_l (features x samples).
///
/// `group_sizes` normally equals the column counts. After Gram compression a
/// block may have fewer columns than its group size; all likelihood and update
/// weighting uses the group sizes.
class GroupedData {
 public:
  GroupedData() = default;
  explicit GroupedData(std::vector<Matrix> blocks);
  GroupedData(std::vector<Matrix> blocks, std::vector<Index> group_sizes);

  Index dim() const { return dim_; }
  Index num_groups() const { return static_cast<Index>(blocks_.size()); }
  Index group_size(Index l) const { return sizes_[static_cast<std::size_t>(l)]; }
  Index total_size() const { return total_; }
  const Matrix& block(Index l) const { return blocks_[static_cast<std::size_t>(l)]; }
  const std::vector<Matrix>& blocks() const { return blocks_; }
  const std::vector<Index>& group_sizes() const { return sizes_; }

  /// Sum over groups of Y_l Y_l'.
  Matrix gram() const;

 private:
  void validate();

  std::vector<Matrix> blocks_;
  std::vector<Index> sizes_;
  Index dim_ = 0;
  Index total_ = 0;
};

/// Factor matrix F (d x k) with its thin SVD F = U diag(lambda)^{1/2} V' and
/// the per-group noise variances v.
///
/// Columns of U are sign-normalized so that each column's largest-magnitude
/// entry is positive; lambda is nonincreasing.
class FactorModel {
 public:
  FactorModel() = default;

  static FactorModel from_factor(Matrix F, Vector v);
  /// F = U diag(lambda)^{1/2}, V = I. U must have orthonormal columns.
  static FactorModel from_eigen(const Matrix& U, const Vector& lambda, Vector v);

  Index dim() const { return F_.rows(); }
  Index rank() const { return F_.cols(); }
  Index num_groups() const { return v_.size(); }

  const Matrix& F() const { return F_; }
  const Vector& v() const { return v_; }
  const Matrix& U() const { return U_; }
  const Vector& lambda() const { return lambda_; }
  const Matrix& V() const { return V_; }

  FactorModel with_v(Vector v) const;

 private:
  void refresh_svd();

  Matrix F_;
  Vector v_;
  Matrix U_;
  Vector lambda_;
  Matrix V_;
};

/// Coefficients of the univariate noise-variance objective for one group:
///   L_l(v) = -sum_{j=0}^k { alpha_j ln(gamma_j + v) + beta_j / (gamma_j + v) }.
/// Index 0 is the residual term (alpha_0 = d - k, gamma_0 = 0).
struct VCoefficients {
  Vector alpha;
  Vector beta;
  Vector gamma;
  std::vector<Index> zero_set;  // J0 = { j : gamma_j == 0 }, always contains 0
  double beta_tilde = 0.0;      // sum of beta over J0

  Index rank() const { return alpha.size() - 1; }
  /// Ambient dimension d = sum of alpha.
  double dim() const { return alpha.sum(); }
  bool in_zero_set(Index j) const { return gamma[j] == 0.0; }

  /// Builds coefficients from explicit (alpha, beta, gamma), deriving J0 and beta_tilde.
  static VCoefficients make(Vector alpha, Vector beta, Vector gamma);
};

double log_likelihood_direct(const GroupedData& data, const FactorModel& model);
double log_likelihood_parts(const GroupedData& data, const FactorModel& model);

/// Per-group terms (n_l/2) L_l(v_l) up to F-only constants; summing them
/// gives log_likelihood_parts.
std::vector<double> log_likelihood_terms(const GroupedData& data, const FactorModel& model);

VCoefficients v_coefficients(const Matrix& block, Index group_size, const FactorModel& model);
std::vector<VCoefficients> v_coefficients(const GroupedData& data, const FactorModel& model);

/// Returns +inf / -inf at v = 0 according to whether beta_tilde vanishes.
double univariate_objective(const VCoefficients& c, double v);
double univariate_derivative(const VCoefficients& c, double v);

/// Flips each column so its largest-magnitude entry is positive.
void normalize_signs(Matrix& U);

/// Top-k eigenpairs of a symmetric matrix, eigenvalues descending, signs normalized.
struct EigenPairs {
  Vector values;   // all d eigenvalues, descending
  Matrix vectors;  // leading k eigenvectors
};
EigenPairs top_eigen(const Matrix& symmetric, Index k);

}  // namespace heppcat
