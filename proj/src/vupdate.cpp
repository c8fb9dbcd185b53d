#include "heppcat/vupdate.hpp"

#include "heppcat/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

namespace heppcat {

namespace {

constexpr int kMaxSplitDepth = 60;
constexpr std::size_t kMaxBoxes = 1u << 20;

std::string dump(const VCoefficients& c, double v_t) {
  std::ostringstream os;
  os.precision(17);
  os << "alpha=[" << c.alpha.transpose() << "] beta=[" << c.beta.transpose() << "] gamma=["
     << c.gamma.transpose() << "] v_t=" << v_t;
  return os.str();
}

// Interval enclosure of the derivative of L_l over [a, b], 0 < a <= b.
// Each summand -alpha/(gamma+v) + beta/(gamma+v)^2 is a sum of a nondecreasing
// and a nonincreasing term, so endpoint evaluation bounds it.
std::pair<double, double> derivative_enclosure(const VCoefficients& c, double a, double b) {
  double lo = 0.0;
  double hi = 0.0;
  for (Index j = 0; j < c.alpha.size(); ++j) {
    const double sa = c.gamma[j] + a;
    const double sb = c.gamma[j] + b;
    lo += -c.alpha[j] / sa + c.beta[j] / (sb * sb);
    hi += -c.alpha[j] / sb + c.beta[j] / (sa * sa);
  }
  return {lo, hi};
}

double refine_root(const VCoefficients& c, double a, double b) {
  // Invariant: derivative(a) >= 0 >= derivative(b).
  for (int it = 0; it < 400 && b - a > 1e-13 * b; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if (univariate_derivative(c, mid) > 0.0)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

double doc_derivative(const VCoefficients& c, double v, double v_t) {
  double acc = 0.0;
  for (Index j = 0; j < c.alpha.size(); ++j) {
    const double s = c.gamma[j] + v;
    acc += -c.alpha[j] / (c.gamma[j] + v_t) + c.beta[j] / (s * s);
  }
  return acc;
}

double em_residual(const VCoefficients& c, double v_t) {
  double rho = 0.0;
  for (Index j = 0; j < c.alpha.size(); ++j) {
    const double shrink = 1.0 - c.gamma[j] / (c.gamma[j] + v_t);
    rho += shrink * shrink * c.beta[j];
  }
  for (Index j = 1; j < c.alpha.size(); ++j) rho += v_t * c.gamma[j] / (c.gamma[j] + v_t);
  return rho;
}

// Unanchored minorizers, each defined up to an additive constant.
double raw_minorizer(MinorizerKind kind, const VCoefficients& c, const MinorizerCoefficients& m,
                     double v, double v_t) {
  switch (kind) {
    case MinorizerKind::em:
      return -c.dim() * std::log(v) - em_residual(c, v_t) / v;
    case MinorizerKind::doc: {
      double acc = 0.0;
      for (Index j = 0; j < c.alpha.size(); ++j)
        acc += c.alpha[j] * v / (c.gamma[j] + v_t) + c.beta[j] / (c.gamma[j] + v);
      return -acc;
    }
    case MinorizerKind::quad:
      return -m.alpha_tilde * std::log(v) - m.B_bar / v - m.zeta * v;
    case MinorizerKind::cubic: {
      double acc = -m.alpha_tilde * std::log(v) - c.beta_tilde / v - m.zeta * v;
      std::size_t i = 0;
      for (Index j = 0; j < c.alpha.size(); ++j) {
        if (c.in_zero_set(j)) continue;
        const double s = c.gamma[j] + v_t;
        acc += c.beta[j] / (s * s) * v + 0.5 * m.curvatures[i++] * (v - v_t) * (v - v_t);
      }
      return acc;
    }
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(VMethod m) {
  switch (m) {
    case VMethod::rootfind: return "rootfind";
    case VMethod::em: return "em";
    case VMethod::doc: return "doc";
    case VMethod::quad: return "quad";
    case VMethod::cubic: return "cubic";
  }
  return "?";
}

std::string_view to_string(MinorizerKind k) {
  switch (k) {
    case MinorizerKind::em: return "em";
    case MinorizerKind::doc: return "doc";
    case MinorizerKind::quad: return "quad";
    case MinorizerKind::cubic: return "cubic";
  }
  return "?";
}

VMethod parse_vmethod(std::string_view name) {
  for (VMethod m : {VMethod::rootfind, VMethod::em, VMethod::doc, VMethod::quad, VMethod::cubic})
    if (to_string(m) == name) return m;
  fail(ErrorKind::usage, "unknown v method '" + std::string(name) + "'");
}

double v_floor(const VCoefficients& c) {
  return 1e-12 * std::max({c.beta_tilde, c.beta.maxCoeff(), 1.0});
}

MinorizerCoefficients minorizer_coefficients(const VCoefficients& c, double v_t) {
  MinorizerCoefficients m;
  m.B_bar = c.beta_tilde;
  for (Index j = 0; j < c.alpha.size(); ++j) {
    if (c.in_zero_set(j)) {
      m.alpha_tilde += c.alpha[j];
      continue;
    }
    const double g = c.gamma[j];
    const double s = g + v_t;
    m.zeta += c.alpha[j] / s;
    m.B_bar += c.beta[j] * (v_t / s) * (v_t / s);
    m.pi.push_back(g / s);
    const double curv = -2.0 * c.beta[j] / (g * g * g);
    m.curvatures.push_back(curv);
    m.c_bar += curv;
    m.gamma_t += c.beta[j] / (s * s);
  }
  m.gamma_t -= m.zeta;
  return m;
}

CriticalBracket critical_bracket(const VCoefficients& c) {
  CriticalBracket b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (Index j = 0; j < c.alpha.size(); ++j) {
    const double s = c.beta[j] / c.alpha[j] - c.gamma[j];
    b.v_min = std::min(b.v_min, s);
    b.v_max = std::max(b.v_max, s);
  }
  return b;
}

double update_v_rootfind(const VCoefficients& c) {
  if (c.beta_tilde == 0.0) return 0.0;
  const CriticalBracket br = critical_bracket(c);
  const double hi = br.v_max;
  const double lo = br.v_min > 0.0 ? br.v_min : std::min(v_floor(c), 0.5 * hi);
  if (!(lo < hi)) return hi;

  const double min_width = 1e-10 * (1.0 + hi);
  std::vector<double> candidates;
  struct Box {
    double a, b;
    int depth;
  };
  std::vector<Box> stack{{lo, hi, 0}};
  std::size_t visited = 0;
  while (!stack.empty()) {
    const Box box = stack.back();
    stack.pop_back();
    if (++visited > kMaxBoxes)
      fail(ErrorKind::numerical, "root isolation exceeded box budget; " + dump(c, 0.0));
    const auto [dlo, dhi] = derivative_enclosure(c, box.a, box.b);
    if (dlo > 0.0 || dhi < 0.0) continue;
    if (box.b - box.a < min_width) {
      const double fa = univariate_derivative(c, box.a);
      const double fb = univariate_derivative(c, box.b);
      if (fa >= 0.0 && fb <= 0.0)
        candidates.push_back(refine_root(c, box.a, box.b));
      else if (!(fa <= 0.0 && fb >= 0.0))
        candidates.push_back(0.5 * (box.a + box.b));  // tangency or unresolved pair
      continue;
    }
    if (box.depth >= kMaxSplitDepth)
      fail(ErrorKind::numerical, "root isolation exceeded split depth; " + dump(c, 0.0));
    const double mid = 0.5 * (box.a + box.b);
    stack.push_back({mid, box.b, box.depth + 1});
    stack.push_back({box.a, mid, box.depth + 1});
  }
  if (candidates.empty()) {
    // The derivative is positive at lo and nonpositive at hi, so a sign change
    // exists; landing here means the enclosure test rejected it.
    if (univariate_derivative(c, lo) > 0.0 && univariate_derivative(c, hi) <= 0.0)
      candidates.push_back(refine_root(c, lo, hi));
    else
      fail(ErrorKind::numerical, "no critical point found in bracket; " + dump(c, 0.0));
  }
  double best = candidates.front();
  double best_val = univariate_objective(c, best);
  for (double r : candidates) {
    const double val = univariate_objective(c, r);
    if (val > best_val) {
      best = r;
      best_val = val;
    }
  }
  // Candidates from boxes without a clean sign change are box midpoints.
  for (double h = 4.0 * min_width; h <= 1e4 * min_width; h *= 10.0) {
    const double a = std::max(lo, best - h);
    const double b = std::min(hi, best + h);
    if (a < b && univariate_derivative(c, a) >= 0.0 && univariate_derivative(c, b) <= 0.0) {
      // The objective is flat to rounding here, so don't compare values.
      best = refine_root(c, a, b);
      break;
    }
  }
  return best;
}

double update_v_em(const VCoefficients& c, double v_t) {
  require(v_t > 0.0, "em update needs v_t > 0");
  return em_residual(c, v_t) / c.dim();
}

double update_v_doc(const VCoefficients& c, double v_t) {
  require(v_t > 0.0, "doc update needs v_t > 0");
  // Derivative of the minorizer at 0+.
  bool unbounded = false;
  double d0 = 0.0;
  double upper = 0.0;
  for (Index j = 0; j < c.alpha.size(); ++j) {
    d0 -= c.alpha[j] / (c.gamma[j] + v_t);
    if (c.beta[j] > 0.0) {
      if (c.in_zero_set(j))
        unbounded = true;
      else
        d0 += c.beta[j] / (c.gamma[j] * c.gamma[j]);
    }
    upper = std::max(upper, std::sqrt(c.beta[j] / c.alpha[j] * (c.gamma[j] + v_t)) - c.gamma[j]);
  }
  if (!unbounded && d0 <= 0.0) return 0.0;
  // At a critical point every summand vanishes at `upper`; allow rounding there.
  double scale = 0.0;
  for (Index j = 0; j < c.alpha.size(); ++j) scale += c.alpha[j] / (c.gamma[j] + v_t);
  if (!(upper > 0.0) || doc_derivative(c, upper, v_t) > 1e-12 * scale)
    fail(ErrorKind::numerical, "difference-of-concave bracket invalid; " + dump(c, v_t));

  double a = 0.0;
  double b = upper;
  const double tol = 1e-12 * (1.0 + v_t);
  while (b - a > tol) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if (doc_derivative(c, mid, v_t) > 0.0)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

double update_v_quadratic(const VCoefficients& c, double v_t) {
  require(v_t > 0.0, "quadratic update needs v_t > 0");
  const MinorizerCoefficients m = minorizer_coefficients(c, v_t);
  if (m.B_bar == 0.0) return 0.0;
  if (m.zeta == 0.0) return m.B_bar / m.alpha_tilde;
  return 2.0 * m.B_bar / (m.alpha_tilde + std::sqrt(m.alpha_tilde * m.alpha_tilde + 4.0 * m.zeta * m.B_bar));
}

std::vector<double> real_cubic_roots(double a, double b, double c, double d) {
  require(a != 0.0, "leading cubic coefficient must be nonzero");
  const double B = b / a;
  const double C = c / a;
  const double D = d / a;
  const double p = C - B * B / 3.0;
  const double q = 2.0 * B * B * B / 27.0 - B * C / 3.0 + D;
  const double shift = -B / 3.0;
  const double disc = 0.25 * q * q + p * p * p / 27.0;

  std::vector<double> roots;
  if (disc > 0.0) {
    const double u = std::cbrt(-0.5 * q - std::copysign(std::sqrt(disc), q));
    const double t = u == 0.0 ? 0.0 : u - p / (3.0 * u);
    roots.push_back(t + shift);
  } else if (p == 0.0) {
    roots.push_back(shift);
  } else {
    // Trigonometric branch: three real roots.
    const double r = 2.0 * std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (p * r), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) roots.push_back(r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) + shift);
  }

  auto f = [&](double x) { return ((a * x + b) * x + c) * x + d; };
  auto df = [&](double x) { return (3.0 * a * x + 2.0 * b) * x + c; };
  for (double& x : roots) {
    for (int it = 0; it < 6; ++it) {
      const double fx = f(x);
      const double dfx = df(x);
      if (fx == 0.0 || dfx == 0.0) break;
      const double next = x - fx / dfx;
      if (!std::isfinite(next) || std::abs(f(next)) >= std::abs(fx)) break;
      x = next;
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

double update_v_cubic(const VCoefficients& c, double v_t) {
  require(v_t > 0.0, "cubic update needs v_t > 0");
  if (c.beta_tilde == 0.0) return 0.0;  // the minorizer is unbounded at 0+, like L_l
  const MinorizerCoefficients m = minorizer_coefficients(c, v_t);

  if (m.c_bar == 0.0) {
    // Remaining equation: gamma_t v^2 - alpha_tilde v + beta_tilde = 0, with gamma_t <= 0.
    if (m.gamma_t > 0.0)
      fail(ErrorKind::numerical, "cubic minorizer unbounded above; " + dump(c, v_t));
    const double a = m.alpha_tilde;
    return 2.0 * c.beta_tilde / (a + std::sqrt(a * a - 4.0 * m.gamma_t * c.beta_tilde));
  }

  const double a3 = m.c_bar;
  const double a2 = m.gamma_t - m.c_bar * v_t;
  const double a1 = -m.alpha_tilde;
  const double a0 = c.beta_tilde;
  const auto roots = real_cubic_roots(a3, a2, a1, a0);

  double best = -1.0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (double r : roots) {
    if (!(r > 0.0)) continue;
    const double val = raw_minorizer(MinorizerKind::cubic, c, m, r, v_t);
    if (val > best_val) {
      best = r;
      best_val = val;
    }
  }
  if (best <= 0.0) fail(ErrorKind::numerical, "cubic minorizer has no positive critical point; " + dump(c, v_t));
  return best;
}

double update_v(VMethod method, const VCoefficients& c, double v_t) {
  switch (method) {
    case VMethod::rootfind: return update_v_rootfind(c);
    case VMethod::em: return update_v_em(c, v_t);
    case VMethod::doc: return update_v_doc(c, v_t);
    case VMethod::quad: return update_v_quadratic(c, v_t);
    case VMethod::cubic: return update_v_cubic(c, v_t);
  }
  return v_t;
}

double eval_minorizer(MinorizerKind kind, const VCoefficients& c, double v, double v_t) {
  require(v > 0.0 && v_t > 0.0, "minorizer evaluation needs v, v_t > 0");
  if (v == v_t) return univariate_objective(c, v_t);
  const MinorizerCoefficients m = minorizer_coefficients(c, v_t);
  return univariate_objective(c, v_t) + (raw_minorizer(kind, c, m, v, v_t) - raw_minorizer(kind, c, m, v_t, v_t));
}

}  // namespace heppcat
