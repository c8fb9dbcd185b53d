#include "heppcat/fitter.hpp"

#include "heppcat/baselines.hpp"
#include "heppcat/error.hpp"
#include "heppcat/fupdate.hpp"
#include "heppcat/random.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace heppcat {

namespace {

double relative_change(const Matrix& next, const Matrix& prev) {
  const double denom = prev.norm();
  const double num = (next - prev).norm();
  if (denom == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / denom;
}

double relative_v_change(const Vector& next, const Vector& prev) {
  double worst = 0.0;
  for (Index l = 0; l < prev.size(); ++l) {
    const double diff = std::abs(next[l] - prev[l]);
    if (diff == 0.0) continue;
    worst = std::max(worst, prev[l] > 0.0 ? diff / prev[l] : std::numeric_limits<double>::infinity());
  }
  return worst;
}

Vector update_all_v(const GroupedData& data, const FactorModel& model, VMethod method) {
  const auto coeffs = v_coefficients(data, model);
  Vector v(data.num_groups());
  for (Index l = 0; l < data.num_groups(); ++l)
    v[l] = update_v(method, coeffs[static_cast<std::size_t>(l)], model.v()[l]);
  return v;
}

void validate(const GroupedData& data, const FitConfig& cfg) {
  const Index d = data.dim();
  require(cfg.rank >= 1 && cfg.rank < d,
          "rank must satisfy 1 <= k < d (k=" + std::to_string(cfg.rank) + ", d=" + std::to_string(d) + ")");
  require(cfg.max_iters >= 1, "max_iters must be at least 1");
  require(cfg.tol >= 0.0 && std::isfinite(cfg.tol), "tolerance must be finite and >= 0");
  if (cfg.init == InitKind::explicit_model) {
    require(cfg.initial_model.has_value(), "explicit initialization needs an initial model");
    const FactorModel& m = *cfg.initial_model;
    require(m.dim() == d && m.rank() == cfg.rank && m.num_groups() == data.num_groups(),
            "initial model shape does not match data and rank");
  }
}

}  // namespace

std::string_view to_string(InitKind k) {
  switch (k) {
    case InitKind::ppca: return "ppca";
    case InitKind::random: return "random";
    case InitKind::explicit_model: return "explicit";
  }
  return "?";
}

std::string_view to_string(BlockRule r) {
  return r == BlockRule::alternate ? "alternate" : "max-improvement";
}

InitKind parse_init(std::string_view name) {
  if (name == "ppca") return InitKind::ppca;
  if (name == "random") return InitKind::random;
  if (name == "explicit") return InitKind::explicit_model;
  fail(ErrorKind::usage, "unknown init '" + std::string(name) + "'");
}

BlockRule parse_block_rule(std::string_view name) {
  if (name == "alternate") return BlockRule::alternate;
  if (name == "max-improvement" || name == "max_improvement") return BlockRule::max_improvement;
  fail(ErrorKind::usage, "unknown block rule '" + std::string(name) + "'");
}

FactorModel init_ppca(const GroupedData& data, Index k) { return ppca_closed_form(data, k); }

FactorModel init_random(Index d, Index k, Index L, std::uint64_t seed) {
  require(d >= 1 && k >= 1 && k <= d && L >= 1, "invalid shape for random initialization");
  Rng rng = make_rng(seed, 0x1417);
  Matrix F = gaussian_matrix(d, k, rng);
  std::uniform_real_distribution<double> unif(1e-12, 1.0);
  Vector v(L);
  for (Index l = 0; l < L; ++l) v[l] = unif(rng);
  return FactorModel::from_factor(std::move(F), std::move(v));
}

FitResult fit(const GroupedData& data, const FitConfig& cfg) {
  validate(data, cfg);
  using clock = std::chrono::steady_clock;

  FactorModel model;
  switch (cfg.init) {
    case InitKind::ppca: model = init_ppca(data, cfg.rank); break;
    case InitKind::random: model = init_random(data.dim(), cfg.rank, data.num_groups(), cfg.seed); break;
    case InitKind::explicit_model: model = *cfg.initial_model; break;
  }

  const bool max_improve = cfg.block_rule == BlockRule::max_improvement;
  const bool track_loglik = cfg.record_trace || cfg.loglik_tol.has_value();

  FitResult res;
  double loglik = log_likelihood_parts(data, model);
  if (cfg.record_trace) {
    res.trace.loglik.push_back(loglik);
    if (cfg.record_v) res.trace.v.push_back(model.v());
  }

  for (int t = 0; t < cfg.max_iters; ++t) {
    const auto start = clock::now();
    FactorModel next;
    double f_change = 0.0;
    double v_change = 0.0;
    double next_loglik = std::numeric_limits<double>::quiet_NaN();
    bool stop = false;
    try {
      if (!max_improve) {
        FactorModel with_f = em_update_F(data, model);
        Vector v = update_all_v(data, with_f, cfg.v_method);
        next = with_f.with_v(std::move(v));
        f_change = relative_change(next.F(), model.F());
        v_change = relative_v_change(next.v(), model.v());
        // F_1 == F_0 whenever F_0 is already optimal for v_0 (e.g. the PPCA
        // start), so the test only applies once v has moved.
        stop = t > 0 && f_change <= cfg.tol;
      } else {
        FactorModel cand_f = em_update_F(data, model);
        FactorModel cand_v = model.with_v(update_all_v(data, model, cfg.v_method));
        const double lf = log_likelihood_parts(data, cand_f);
        const double lv = log_likelihood_parts(data, cand_v);
        const double cand_f_change = relative_change(cand_f.F(), model.F());
        const double cand_v_change = relative_v_change(cand_v.v(), model.v());
        // Stationary when neither block would move.
        stop = cand_f_change <= cfg.tol && cand_v_change <= cfg.tol;
        if (lf >= lv) {
          next = std::move(cand_f);
          next_loglik = lf;
        } else {
          next = std::move(cand_v);
          next_loglik = lv;
        }
        f_change = relative_change(next.F(), model.F());
        v_change = relative_v_change(next.v(), model.v());
      }
    } catch (const Error& e) {
      throw IterationError(t + 1, e);
    }
    const double seconds = std::chrono::duration<double>(clock::now() - start).count();

    if (std::isnan(next_loglik) && track_loglik) next_loglik = log_likelihood_parts(data, next);
    if (cfg.v_tol) stop = stop && v_change <= *cfg.v_tol;
    if (cfg.loglik_tol) stop = stop && std::abs(next_loglik - loglik) <= *cfg.loglik_tol * (1.0 + std::abs(loglik));

    model = std::move(next);
    loglik = next_loglik;
    res.iterations = t + 1;
    if (cfg.record_trace) {
      res.trace.loglik.push_back(loglik);
      res.trace.f_change.push_back(f_change);
      res.trace.seconds.push_back(seconds);
      if (cfg.record_v) res.trace.v.push_back(model.v());
    }
    if (stop) {
      res.converged = true;
      break;
    }
  }
  res.loglik = std::isnan(loglik) ? log_likelihood_parts(data, model) : loglik;
  res.model = std::move(model);
  return res;
}

}  // namespace heppcat
