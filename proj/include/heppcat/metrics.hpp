#pragma once

#include "heppcat/model.hpp"

#include <span>

namespace heppcat {

/// ||F_hat F_hat' - F F'||_F^2 / ||F F'||_F^2 (squared Frobenius ratio).
double factor_error(const Matrix& F_hat, const Matrix& F_true);

/// ||U_hat U_hat' - U U'||_F^2 / ||U U'||_F^2 for orthonormal U_hat, U.
double subspace_error(const Matrix& U_hat, const Matrix& U_true);

/// |u_hat_j' u_j|^2 for each column j, matched by index.
Vector component_recovery(const Matrix& U_hat, const Matrix& U_true);

/// ||Y - U U' Y||_F / ||Y||_F.
double nrmse(const Matrix& Y, const Matrix& U_hat);

/// mean(estimate - truth) / truth.
double relative_bias(std::span<const double> estimates, double truth);

}  // namespace heppcat
