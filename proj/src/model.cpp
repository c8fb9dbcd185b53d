#include "heppcat/model.hpp"

#include "heppcat/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace heppcat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_model_matches(const GroupedData& data, const FactorModel& model) {
  require(data.num_groups() > 0, "empty dataset");
  require(model.dim() == data.dim(), "model dimension " + std::to_string(model.dim()) +
                                         " does not match data dimension " +
                                         std::to_string(data.dim()));
  require(model.num_groups() == data.num_groups(),
          "model has " + std::to_string(model.num_groups()) + " noise variances but data has " +
              std::to_string(data.num_groups()) + " groups");
}

}  // namespace

GroupedData::GroupedData(std::vector<Matrix> blocks) : blocks_(std::move(blocks)) {
  sizes_.reserve(blocks_.size());
  for (const auto& b : blocks_) sizes_.push_back(b.cols());
  validate();
}

GroupedData::GroupedData(std::vector<Matrix> blocks, std::vector<Index> group_sizes)
    : blocks_(std::move(blocks)), sizes_(std::move(group_sizes)) {
  validate();
}

void GroupedData::validate() {
  require(!blocks_.empty(), "dataset needs at least one group");
  require(blocks_.size() == sizes_.size(), "one group size per block required");
  dim_ = blocks_.front().rows();
  require(dim_ > 0, "dataset dimension must be positive");
  total_ = 0;
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const Matrix& b = blocks_[l];
    require(b.rows() == dim_, "block " + std::to_string(l) + " has " + std::to_string(b.rows()) +
                                  " rows, expected " + std::to_string(dim_));
    require(sizes_[l] >= 1, "group " + std::to_string(l) + " is empty");
    require(b.cols() >= 1 && b.cols() <= std::max(sizes_[l], dim_),
            "block " + std::to_string(l) + " column count inconsistent with its group size");
    require(b.allFinite(), "block " + std::to_string(l) + " contains non-finite entries");
    total_ += sizes_[l];
  }
}

Matrix GroupedData::gram() const {
  Matrix G = Matrix::Zero(dim_, dim_);
  for (const auto& b : blocks_) G.selfadjointView<Eigen::Lower>().rankUpdate(b);
  return G.selfadjointView<Eigen::Lower>();
}

void normalize_signs(Matrix& U) {
  for (Index j = 0; j < U.cols(); ++j) {
    Index imax = 0;
    U.col(j).cwiseAbs().maxCoeff(&imax);
    if (U(imax, j) < 0) U.col(j) = -U.col(j);
  }
}

EigenPairs top_eigen(const Matrix& symmetric, Index k) {
  require(symmetric.rows() == symmetric.cols(), "top_eigen needs a square matrix");
  require(k >= 0 && k <= symmetric.rows(), "top_eigen rank out of range");
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric);
  if (es.info() != Eigen::Success) fail(ErrorKind::numerical, "symmetric eigendecomposition failed");
  const Index d = symmetric.rows();
  EigenPairs out;
  out.values = es.eigenvalues().reverse();
  out.vectors.resize(d, k);
  for (Index j = 0; j < k; ++j) out.vectors.col(j) = es.eigenvectors().col(d - 1 - j);
  normalize_signs(out.vectors);
  return out;
}

FactorModel FactorModel::from_factor(Matrix F, Vector v) {
  require(F.rows() > 0 && F.cols() > 0, "factor matrix must be non-empty");
  require(F.cols() <= F.rows(), "factor rank exceeds dimension");
  require(F.allFinite(), "factor matrix has non-finite entries");
  require(v.size() >= 1, "need at least one noise variance");
  if (!(v.allFinite() && (v.array() >= 0).all())) fail(ErrorKind::domain, "noise variances must be finite and >= 0");
  FactorModel m;
  m.F_ = std::move(F);
  m.v_ = std::move(v);
  m.refresh_svd();
  return m;
}

FactorModel FactorModel::from_eigen(const Matrix& U, const Vector& lambda, Vector v) {
  require(U.cols() == lambda.size(), "U and lambda disagree on rank");
  require((lambda.array() >= 0).all(), "lambda must be nonnegative");
  for (Index j = 1; j < lambda.size(); ++j)
    require(lambda[j] <= lambda[j - 1], "lambda must be nonincreasing");
  require(v.size() >= 1, "need at least one noise variance");
  if (!(v.allFinite() && (v.array() >= 0).all())) fail(ErrorKind::domain, "noise variances must be finite and >= 0");
  FactorModel m;
  m.U_ = U;
  normalize_signs(m.U_);
  m.lambda_ = lambda;
  m.V_ = Matrix::Identity(U.cols(), U.cols());
  m.F_ = m.U_ * lambda.cwiseSqrt().asDiagonal();
  m.v_ = std::move(v);
  return m;
}

FactorModel FactorModel::with_v(Vector v) const {
  require(v.size() == v_.size(), "noise variance count mismatch");
  if (!(v.allFinite() && (v.array() >= 0).all())) fail(ErrorKind::domain, "noise variances must be finite and >= 0");
  FactorModel m = *this;
  m.v_ = std::move(v);
  return m;
}

void FactorModel::refresh_svd() {
  Eigen::JacobiSVD<Matrix> svd(F_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  U_ = svd.matrixU();
  V_ = svd.matrixV();
  lambda_ = svd.singularValues().array().square();
  for (Index j = 0; j < U_.cols(); ++j) {
    Index imax = 0;
    U_.col(j).cwiseAbs().maxCoeff(&imax);
    if (U_(imax, j) < 0) {
      U_.col(j) = -U_.col(j);
      V_.col(j) = -V_.col(j);
    }
  }
}

VCoefficients VCoefficients::make(Vector alpha, Vector beta, Vector gamma) {
  require(alpha.size() >= 1 && alpha.size() == beta.size() && alpha.size() == gamma.size(),
          "coefficient vectors must share length k+1");
  require(gamma[0] == 0.0, "gamma_0 must be zero");
  require((beta.array() >= 0).all() && (gamma.array() >= 0).all() && (alpha.array() > 0).all(),
          "coefficients out of range");
  VCoefficients c;
  c.alpha = std::move(alpha);
  c.beta = std::move(beta);
  c.gamma = std::move(gamma);
  for (Index j = 0; j < c.gamma.size(); ++j) {
    if (c.gamma[j] == 0.0) {
      c.zero_set.push_back(j);
      c.beta_tilde += c.beta[j];
    }
  }
  return c;
}

// ||u_j' Y||^2 per column of U. One gemv per column beats a k x n GEMM for small k.
static Vector projected_energy(const Matrix& U, const Matrix& Y) {
  Vector e(U.cols());
  for (Index j = 0; j < U.cols(); ++j) e[j] = (U.col(j).transpose() * Y).squaredNorm();
  return e;
}

VCoefficients v_coefficients(const Matrix& block, Index group_size, const FactorModel& model) {
  require(block.rows() == model.dim(), "block dimension does not match model");
  require(group_size >= 1, "group size must be positive");
  const Index d = model.dim();
  const Index k = model.rank();
  const double n = static_cast<double>(group_size);

  const Vector energy = projected_energy(model.U(), block);
  Vector alpha = Vector::Ones(k + 1);
  alpha[0] = static_cast<double>(d - k);
  Vector beta(k + 1);
  Vector gamma(k + 1);
  gamma[0] = 0.0;
  double captured = 0.0;
  for (Index j = 0; j < k; ++j) {
    const double e = energy[j];
    captured += e;
    beta[j + 1] = e / n;
    gamma[j + 1] = model.lambda()[j];
  }
  // beta_0 is a squared norm; clamp away cancellation error.
  beta[0] = std::max(0.0, (block.squaredNorm() - captured) / n);
  return VCoefficients::make(std::move(alpha), std::move(beta), std::move(gamma));
}

std::vector<VCoefficients> v_coefficients(const GroupedData& data, const FactorModel& model) {
  check_model_matches(data, model);
  std::vector<VCoefficients> out;
  out.reserve(static_cast<std::size_t>(data.num_groups()));
  for (Index l = 0; l < data.num_groups(); ++l)
    out.push_back(v_coefficients(data.block(l), data.group_size(l), model));
  return out;
}

double univariate_objective(const VCoefficients& c, double v) {
  if (v == 0.0) return c.beta_tilde == 0.0 ? kInf : -kInf;
  double acc = 0.0;
  for (Index j = 0; j < c.alpha.size(); ++j) {
    const double s = c.gamma[j] + v;
    acc += c.alpha[j] * std::log(s) + c.beta[j] / s;
  }
  return -acc;
}

double univariate_derivative(const VCoefficients& c, double v) {
  double acc = 0.0;
  for (Index j = 0; j < c.alpha.size(); ++j) {
    const double s = c.gamma[j] + v;
    acc += (c.beta[j] / s - c.alpha[j]) / s;
  }
  return acc;
}

double log_likelihood_direct(const GroupedData& data, const FactorModel& model) {
  check_model_matches(data, model);
  const Matrix FFt = model.F() * model.F().transpose();
  double total = 0.0;
  for (Index l = 0; l < data.num_groups(); ++l) {
    const double v = model.v()[l];
    if (!(v > 0.0)) fail(ErrorKind::domain, "noise variance of group " + std::to_string(l) + " is not positive");
    Matrix C = FFt;
    C.diagonal().array() += v;
    Eigen::LLT<Matrix> llt(C);
    if (llt.info() != Eigen::Success) fail(ErrorKind::domain, "covariance not positive definite");
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const Matrix W = llt.matrixL().solve(data.block(l));
    total += 0.5 * (-static_cast<double>(data.group_size(l)) * logdet - W.squaredNorm());
  }
  return total;
}

std::vector<double> log_likelihood_terms(const GroupedData& data, const FactorModel& model) {
  check_model_matches(data, model);
  const Index d = data.dim();
  const Index k = model.rank();
  const Vector& lambda = model.lambda();
  std::vector<double> terms(static_cast<std::size_t>(data.num_groups()));
  for (Index l = 0; l < data.num_groups(); ++l) {
    const double v = model.v()[l];
    const double n = static_cast<double>(data.group_size(l));
    const Matrix& Y = data.block(l);
    if (v < 0.0 || std::isnan(v)) fail(ErrorKind::domain, "noise variance of group " + std::to_string(l) + " is negative");
    if (v == 0.0) {
      terms[static_cast<std::size_t>(l)] = univariate_objective(v_coefficients(Y, data.group_size(l), model), 0.0);
      continue;
    }
    const Vector energy = projected_energy(model.U(), Y);
    double logdet = static_cast<double>(d - k) * std::log(v);
    double weighted = 0.0;
    for (Index j = 0; j < k; ++j) {
      logdet += std::log(lambda[j] + v);
      weighted += (lambda[j] / v) / (lambda[j] + v) * energy[j];
    }
    terms[static_cast<std::size_t>(l)] = 0.5 * (-n * logdet - Y.squaredNorm() / v + weighted);
  }
  return terms;
}

double log_likelihood_parts(const GroupedData& data, const FactorModel& model) {
  const auto terms = log_likelihood_terms(data, model);
  return std::accumulate(terms.begin(), terms.end(), 0.0);
}

}  // namespace heppcat
