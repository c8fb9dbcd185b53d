#include "heppcat/fupdate.hpp"

#include "heppcat/error.hpp"

#include <string>

namespace heppcat {

FactorModel em_update_F(const GroupedData& data, const FactorModel& model) {
  require(model.dim() == data.dim() && model.num_groups() == data.num_groups(),
          "model does not match data");
  const Index d = data.dim();
  const Index k = model.rank();
  const Vector& lambda = model.lambda();
  const Vector sqrt_lambda = lambda.cwiseSqrt();

  Matrix A = Matrix::Zero(d, k);
  Matrix B = Matrix::Zero(k, k);
  for (Index l = 0; l < data.num_groups(); ++l) {
    const double v = model.v()[l];
    if (!(v > 0.0))
      fail(ErrorKind::numerical, "F update needs positive noise variances (group " + std::to_string(l) + ")");
    const Matrix& Y = data.block(l);
    const Vector D = (lambda.array() + v).inverse();
    const Vector scale = D.cwiseProduct(sqrt_lambda);
    const Matrix Zt = scale.asDiagonal() * (model.U().transpose() * Y);  // k x cols
    A.noalias() += (Y * Zt.transpose()) / v;
    B.noalias() += (Zt * Zt.transpose()) / v;
    B.diagonal() += static_cast<double>(data.group_size(l)) * D;
  }

  Eigen::LLT<Matrix> llt(B);
  const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  if (!(rcond >= 1e-14))
    fail(ErrorKind::numerical, "F update system is singular (rcond " + std::to_string(rcond) + ")");
  // F+ = A B^{-1} V' ; B symmetric so A B^{-1} = (B^{-1} A')'.
  Matrix F = llt.solve(A.transpose()).transpose() * model.V().transpose();
  return FactorModel::from_factor(std::move(F), model.v());
}

GroupedData compress_gram(const GroupedData& data) {
  std::vector<Matrix> blocks;
  blocks.reserve(static_cast<std::size_t>(data.num_groups()));
  const Index d = data.dim();
  for (Index l = 0; l < data.num_groups(); ++l) {
    const Matrix& Y = data.block(l);
    if (Y.cols() <= d) {
      blocks.push_back(Y);
      continue;
    }
    Matrix G = Matrix::Zero(d, d);
    G.selfadjointView<Eigen::Lower>().rankUpdate(Y);
    Eigen::SelfAdjointEigenSolver<Matrix> es(G.selfadjointView<Eigen::Lower>());
    if (es.info() != Eigen::Success) fail(ErrorKind::numerical, "Gram eigendecomposition failed");
    const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    blocks.push_back(es.eigenvectors() * root.asDiagonal());
  }
  return GroupedData(std::move(blocks), data.group_sizes());
}

}  // namespace heppcat
