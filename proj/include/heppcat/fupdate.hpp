#pragma once

#include "heppcat/model.hpp"

namespace heppcat {

/// EM update of F with v held fixed, in the SVD form
///   F+ = (sum_l Y_l Zt_l' / v_l) (sum_l Zt_l Zt_l' / v_l + n_l D_l)^{-1} V'
/// where D_l = (Lambda + v_l I)^{-1} and Zt_l = D_l Lambda^{1/2} U' Y_l.
/// Requires every v_l > 0. Throws ErrorKind::numerical when the k x k system
/// is too ill-conditioned to invert (reciprocal condition < 1e-14).
FactorModel em_update_F(const GroupedData& data, const FactorModel& model);

/// Replaces every block with n_l > d by a d x d matrix with the same Gram
/// matrix Y_l Y_l'. Group sizes keep their original values.
GroupedData compress_gram(const GroupedData& data);

}  // namespace heppcat
