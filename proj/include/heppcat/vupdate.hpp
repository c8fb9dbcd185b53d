#pragma once

// Noise-variance updates for one group with the factor matrix held fixed.
//
// Every method works on the univariate objective L_l(v) described by
// VCoefficients. Root finding returns a global maximizer; the other four
// maximize a minorizer anchored at the current iterate v_t, so each step is an
// ascent step on L_l.

#include "heppcat/model.hpp"

#include <string_view>
#include <vector>

namespace heppcat {

enum class VMethod { rootfind, em, doc, quad, cubic };
enum class MinorizerKind { em, doc, quad, cubic };

std::string_view to_string(VMethod m);
std::string_view to_string(MinorizerKind k);
VMethod parse_vmethod(std::string_view name);

/// Smallest variance used outside the exact beta_tilde == 0 branch.
double v_floor(const VCoefficients& c);

/// Pieces shared by the quadratic and cubic minorizers at v_t.
struct MinorizerCoefficients {
  double alpha_tilde = 0.0;  // sum of alpha over J0
  double zeta = 0.0;         // sum_{j not in J0} alpha_j / (gamma_j + v_t)
  double B_bar = 0.0;        // beta_tilde + sum_{j not in J0} beta_j v_t^2 / (gamma_j + v_t)^2
  std::vector<double> pi;    // gamma_j / (gamma_j + v_t), j not in J0
  std::vector<double> curvatures;  // -2 beta_j / gamma_j^3, j not in J0
  double c_bar = 0.0;        // sum of curvatures
  double gamma_t = 0.0;      // -zeta + sum_{j not in J0} beta_j / (gamma_j + v_t)^2
};

MinorizerCoefficients minorizer_coefficients(const VCoefficients& c, double v_t);

/// Critical-point bracket [v_min, v_max] of L_l.
struct CriticalBracket {
  double v_min;
  double v_max;
};
CriticalBracket critical_bracket(const VCoefficients& c);

double update_v_rootfind(const VCoefficients& c);
double update_v_em(const VCoefficients& c, double v_t);
double update_v_doc(const VCoefficients& c, double v_t);
double update_v_quadratic(const VCoefficients& c, double v_t);
double update_v_cubic(const VCoefficients& c, double v_t);

/// Dispatches to the chosen method; rootfind ignores v_t.
double update_v(VMethod method, const VCoefficients& c, double v_t);

/// Minorizer of L_l at v_t, shifted so that it equals L_l(v_t) at v = v_t.
double eval_minorizer(MinorizerKind kind, const VCoefficients& c, double v, double v_t);

/// All real roots of a x^3 + b x^2 + c x + d (a != 0), ascending, Newton-polished.
std::vector<double> real_cubic_roots(double a, double b, double c, double d);

}  // namespace heppcat
