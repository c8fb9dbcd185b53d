#pragma once

// Block ascent driver: alternate (or maximum-improvement) updates of F and v.

#include "heppcat/model.hpp"
#include "heppcat/vupdate.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace heppcat {

enum class InitKind { ppca, random, explicit_model };
enum class BlockRule { alternate, max_improvement };

std::string_view to_string(InitKind k);
std::string_view to_string(BlockRule r);
InitKind parse_init(std::string_view name);
BlockRule parse_block_rule(std::string_view name);

struct FitConfig {
  Index rank = 1;
  VMethod v_method = VMethod::em;
  int max_iters = 1000;
  double tol = 1e-6;
  InitKind init = InitKind::ppca;
  std::optional<FactorModel> initial_model;  // used when init == explicit_model
  BlockRule block_rule = BlockRule::alternate;
  bool record_trace = true;
  bool record_v = false;
  std::uint64_t seed = 0;
  // Optional extra stopping tests; off when unset.
  std::optional<double> v_tol;        // max_l |v+ - v| / v
  std::optional<double> loglik_tol;   // |L+ - L| / (1 + |L|)
};

struct FitTrace {
  std::vector<double> loglik;    // size iterations + 1; entry 0 is the initial model
  std::vector<double> f_change;  // ||F+ - F|| / ||F|| per iteration
  std::vector<double> seconds;   // wall time of the updates per iteration, likelihood excluded
  std::vector<Vector> v;         // iterates of v when record_v, size iterations + 1
};

struct FitResult {
  FactorModel model;
  int iterations = 0;
  bool converged = false;
  double loglik = 0.0;
  FitTrace trace;
};

/// Homoscedastic PPCA starting point (top-k eigenvectors of the pooled
/// sample covariance, lambda clamped at 0, v equal to the residual mean
/// eigenvalue in every group).
FactorModel init_ppca(const GroupedData& data, Index k);

/// F with i.i.d. N(0,1) entries, v i.i.d. uniform on [1e-12, 1).
FactorModel init_random(Index d, Index k, Index L, std::uint64_t seed);

FitResult fit(const GroupedData& data, const FitConfig& cfg);

}  // namespace heppcat
