#include "heppcat/metrics.hpp"

#include "heppcat/error.hpp"

#include <numeric>

namespace heppcat {

namespace {

void require_orthonormal(const Matrix& U, const char* name) {
  const double dev = (U.transpose() * U - Matrix::Identity(U.cols(), U.cols())).cwiseAbs().maxCoeff();
  require(dev <= 1e-8, std::string(name) + " does not have orthonormal columns");
}

}  // namespace

double factor_error(const Matrix& F_hat, const Matrix& F_true) {
  require(F_hat.rows() == F_true.rows(), "factor_error needs matching dimensions");
  const Matrix truth = F_true * F_true.transpose();
  const double denom = truth.squaredNorm();
  if (denom == 0.0) fail(ErrorKind::domain, "factor_error undefined for a zero true factor");
  return (F_hat * F_hat.transpose() - truth).squaredNorm() / denom;
}

double subspace_error(const Matrix& U_hat, const Matrix& U_true) {
  require(U_hat.rows() == U_true.rows() && U_hat.cols() == U_true.cols(),
          "subspace_error needs matching shapes");
  require_orthonormal(U_hat, "U_hat");
  require_orthonormal(U_true, "U_true");
  // ||P - Q||^2 = 2k - 2 ||U_hat' U||^2 for orthogonal projectors of rank k.
  const double k = static_cast<double>(U_true.cols());
  const double cross = (U_hat.transpose() * U_true).squaredNorm();
  return std::max(0.0, 2.0 * k - 2.0 * cross) / k;
}

Vector component_recovery(const Matrix& U_hat, const Matrix& U_true) {
  require(U_hat.rows() == U_true.rows() && U_hat.cols() == U_true.cols(),
          "component_recovery needs matching shapes");
  return (U_hat.transpose() * U_true).diagonal().array().square().min(1.0);
}

double nrmse(const Matrix& Y, const Matrix& U_hat) {
  require(Y.rows() == U_hat.rows(), "nrmse needs matching dimensions");
  const double total = Y.norm();
  if (total == 0.0) fail(ErrorKind::domain, "nrmse undefined for zero data");
  return (Y - U_hat * (U_hat.transpose() * Y)).norm() / total;
}

double relative_bias(std::span<const double> estimates, double truth) {
  require(!estimates.empty(), "relative_bias needs at least one estimate");
  require(truth != 0.0, "relative_bias needs a nonzero truth");
  const double mean = std::accumulate(estimates.begin(), estimates.end(), 0.0) / static_cast<double>(estimates.size());
  return (mean - truth) / truth;
}

}  // namespace heppcat
