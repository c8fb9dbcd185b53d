#include "heppcat/experiments.hpp"

#include "heppcat/baselines.hpp"
#include "heppcat/error.hpp"
#include "heppcat/fitter.hpp"
#include "heppcat/fupdate.hpp"
#include "heppcat/io.hpp"
#include "heppcat/metrics.hpp"
#include "heppcat/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

namespace heppcat {

namespace {

constexpr Index kDim = 100;
constexpr Index kRank = 3;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const std::vector<Index> kGroupSizes{200, 800};
const std::vector<Index> kBlockSizes{1, 10, 100};

// Runs fn(0..count-1) on a pool of workers; the first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) return kNaN;
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

GroupedData regroup(const GroupedData& data, Index block) {
  Matrix all(data.dim(), data.total_size());
  Index col = 0;
  for (const auto& b : data.blocks()) {
    all.middleCols(col, b.cols()) = b;
    col += b.cols();
  }
  std::vector<Matrix> blocks;
  for (Index start = 0; start < all.cols(); start += block)
    blocks.push_back(all.middleCols(start, std::min(block, all.cols() - start)));
  return GroupedData(std::move(blocks));
}

GroupedData single_group(const GroupedData& data, Index l) { return GroupedData({data.block(l)}); }

GroupedData pooled(const GroupedData& data) { return regroup(data, data.total_size()); }

std::string heppcat_name(VMethod m) { return "heppcat-" + std::string(to_string(m)); }

FitResult fit_heppcat(const GroupedData& data, VMethod m, int max_iters) {
  FitConfig cfg;
  cfg.rank = kRank;
  cfg.v_method = m;
  cfg.max_iters = max_iters;
  cfg.tol = 0.0;
  cfg.record_trace = false;
  return fit(data, cfg);
}

struct TrialContext {
  int trial;
  double sigma2;
  const TruthModel& truth;
  std::vector<MetricRow>& rows;
  std::vector<std::string>& warnings;

  void add(const std::string& method, const std::string& metric, double value) {
    rows.push_back({trial, sigma2, method, metric, value});
  }

  // Runs one method; on failure records NaN for the listed metrics.
  template <class Fn>
  void guarded(const std::string& method, const std::vector<std::string>& metrics, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      std::ostringstream os;
      os << "trial " << trial << ", sigma2 " << sigma2 << ", " << method << ": " << e.what();
      warnings.push_back(os.str());
      for (const auto& m : metrics) add(method, m, kNaN);
    }
  }

  void factor_metrics(const std::string& method, const FactorModel& model) {
    add(method, "factor_error", factor_error(model.F(), truth.factor()));
    recovery(method, model.U());
  }

  void recovery(const std::string& method, const Matrix& U) {
    const Vector rec = component_recovery(U, truth.U);
    for (Index j = 0; j < rec.size(); ++j) add(method, "recovery_u" + std::to_string(j + 1), rec[j]);
  }
};

const std::vector<std::string> kFactorMetrics{"factor_error", "recovery_u1", "recovery_u2", "recovery_u3"};
const std::vector<std::string> kSubspaceMetrics{"subspace_error", "recovery_u1", "recovery_u2", "recovery_u3"};

void run_trial(const BenchmarkOptions& opts, TrialContext& ctx, std::uint64_t data_seed) {
  const GroupedData data = generate(ctx.truth, data_seed);
  const std::string& preset = opts.preset;

  if (preset == "fig3") {
    for (VMethod m : opts.methods)
      ctx.guarded(heppcat_name(m), kFactorMetrics,
                  [&] { ctx.factor_metrics(heppcat_name(m), fit_heppcat(data, m, opts.max_iters).model); });
    ctx.guarded("ppca-full", kFactorMetrics,
                [&] { ctx.factor_metrics("ppca-full", ppca_closed_form(pooled(data), kRank)); });
    ctx.guarded("ppca-group1", kFactorMetrics,
                [&] { ctx.factor_metrics("ppca-group1", ppca_closed_form(single_group(data, 0), kRank)); });
    ctx.guarded("ppca-group2", kFactorMetrics,
                [&] { ctx.factor_metrics("ppca-group2", ppca_closed_form(single_group(data, 1), kRank)); });
  } else if (preset == "fig4") {
    for (VMethod m : opts.methods) {
      const std::string name = heppcat_name(m);
      ctx.guarded(name, kSubspaceMetrics, [&] {
        const FactorModel model = fit_heppcat(data, m, opts.max_iters).model;
        ctx.add(name, "subspace_error", subspace_error(model.U(), ctx.truth.U));
        ctx.recovery(name, model.U());
      });
    }
    const Vector& v = ctx.truth.v;
    for (const auto& [name, w] : {std::pair<std::string, Vector>{"wpca-inv", v.cwiseInverse()},
                                  std::pair<std::string, Vector>{"wpca-sqinv", v.array().square().inverse()}}) {
      ctx.guarded(name, kSubspaceMetrics, [&] {
        const Matrix U = weighted_pca(data, w, kRank);
        ctx.add(name, "subspace_error", subspace_error(U, ctx.truth.U));
        ctx.recovery(name, U);
      });
    }
  } else if (preset == "fig5") {
    std::vector<std::string> metrics;
    for (Index l = 0; l < ctx.truth.num_groups(); ++l) metrics.push_back("v" + std::to_string(l + 1) + "_relerr");
    for (Index j = 0; j < kRank; ++j) metrics.push_back("lambda" + std::to_string(j + 1) + "_relerr");
    for (VMethod m : opts.methods) {
      const std::string name = heppcat_name(m);
      ctx.guarded(name, metrics, [&] {
        const FactorModel model = fit_heppcat(data, m, opts.max_iters).model;
        for (Index l = 0; l < model.num_groups(); ++l)
          ctx.add(name, metrics[static_cast<std::size_t>(l)], (model.v()[l] - ctx.truth.v[l]) / ctx.truth.v[l]);
        for (Index j = 0; j < kRank; ++j)
          ctx.add(name, metrics[static_cast<std::size_t>(model.num_groups() + j)],
                  (model.lambda()[j] - ctx.truth.lambda[j]) / ctx.truth.lambda[j]);
      });
    }
  } else if (preset == "fig6-blocks") {
    for (VMethod m : opts.methods) {
      for (Index b : kBlockSizes) {
        const std::string name = heppcat_name(m) + "-b" + std::to_string(b);
        ctx.guarded(name, {"factor_error"}, [&] {
          const FactorModel model = fit_heppcat(regroup(data, b), m, opts.max_iters).model;
          ctx.add(name, "factor_error", factor_error(model.F(), ctx.truth.factor()));
          for (Index i = 0; i < data.total_size(); ++i)
            ctx.add(name, i < data.group_size(0) ? "vhat_g1" : "vhat_g2", model.v()[i / b]);
        });
      }
    }
  } else if (preset == "fig7") {
    for (VMethod m : opts.methods) {
      ctx.guarded(heppcat_name(m), {"factor_error"}, [&] {
        const FactorModel model = fit_heppcat(data, m, opts.max_iters).model;
        ctx.add(heppcat_name(m), "factor_error", factor_error(model.F(), ctx.truth.factor()));
      });
      for (Index b : kBlockSizes) {
        const std::string name = heppcat_name(m) + "-b" + std::to_string(b);
        ctx.guarded(name, {"factor_error"}, [&] {
          const FactorModel model = fit_heppcat(regroup(data, b), m, opts.max_iters).model;
          ctx.add(name, "factor_error", factor_error(model.F(), ctx.truth.factor()));
        });
      }
    }
    ctx.guarded("ppca-full", {"factor_error"}, [&] {
      ctx.add("ppca-full", "factor_error", factor_error(ppca_closed_form(pooled(data), kRank).F(), ctx.truth.factor()));
    });
  }
}

}  // namespace

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HEPPCAT_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

bool is_benchmark_preset(const std::string& name) {
  return name == "fig3" || name == "fig4" || name == "fig5" || name == "fig6-blocks" || name == "fig7";
}

std::vector<double> default_sigma_grid(const std::string& preset) {
  if (preset == "fig6-blocks") return {2.0};
  if (preset == "fig5") return {2.0};
  std::vector<double> grid;
  for (int i = 1; i <= 12; ++i) grid.push_back(0.25 * i);
  return grid;
}

TruthModel planted_truth(double sigma2, std::uint64_t seed) {
  require(sigma2 > 0.0 && std::isfinite(sigma2), "sigma2 must be positive");
  Vector lambda(3);
  lambda << 4.0, 2.0, 1.0;
  Vector v(2);
  v << 1.0, sigma2 * sigma2;
  return make_truth(kDim, lambda, v, kGroupSizes, seed);
}

BenchmarkResult run_benchmark(const BenchmarkOptions& opts) {
  if (!is_benchmark_preset(opts.preset)) fail(ErrorKind::usage, "unknown benchmark preset '" + opts.preset + "'");
  require(opts.trials >= 1, "trials must be at least 1");
  require(opts.max_iters >= 1, "max_iters must be at least 1");
  require(!opts.methods.empty(), "at least one HePPCAT method is required");
  const std::vector<double> grid = opts.sigma_grid.empty() ? default_sigma_grid(opts.preset) : opts.sigma_grid;
  for (double s : grid) require(s > 0.0 && std::isfinite(s), "sigma grid entries must be positive");

  const std::size_t units = static_cast<std::size_t>(opts.trials) * grid.size();
  std::vector<std::vector<MetricRow>> unit_rows(units);
  std::vector<std::vector<std::string>> unit_warnings(units);
  parallel_for(units, worker_count(opts.threads), [&](std::size_t u) {
    const int trial = static_cast<int>(u / grid.size());
    const double sigma2 = grid[u % grid.size()];
    // The same U and noise draws are reused across the sigma grid within a trial.
    const auto utrial = static_cast<std::uint64_t>(trial);
    const TruthModel truth = planted_truth(sigma2, derive_seed(opts.seed, utrial, 1));
    TrialContext ctx{trial, sigma2, truth, unit_rows[u], unit_warnings[u]};
    run_trial(opts, ctx, derive_seed(opts.seed, utrial, 2));
  });

  BenchmarkResult res;
  for (std::size_t u = 0; u < units; ++u) {
    res.rows.insert(res.rows.end(), unit_rows[u].begin(), unit_rows[u].end());
    res.warnings.insert(res.warnings.end(), unit_warnings[u].begin(), unit_warnings[u].end());
  }
  std::stable_sort(res.rows.begin(), res.rows.end(), [](const MetricRow& a, const MetricRow& b) {
    if (a.trial != b.trial) return a.trial < b.trial;
    if (a.sigma2 != b.sigma2) return a.sigma2 < b.sigma2;
    return a.method < b.method;
  });
  return res;
}

std::vector<SummaryRow> summarize(const std::vector<MetricRow>& rows) {
  struct Key {
    double sigma2;
    std::string method, metric;
    bool operator<(const Key& o) const {
      return std::tie(sigma2, method, metric) < std::tie(o.sigma2, o.method, o.metric);
    }
  };
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : rows) {
    auto& xs = groups[{r.sigma2, r.method, r.metric}];
    if (!std::isnan(r.value)) xs.push_back(r.value);
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, xs] : groups) {
    double mean = kNaN;
    if (!xs.empty()) {
      mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
    }
    out.push_back({key.sigma2, key.method, key.metric, xs.size(), quantile(xs, 0.5), quantile(xs, 0.25),
                   quantile(xs, 0.75), mean});
  }
  return out;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << "trial,sigma2,method,metric,value\n";
  for (const auto& r : rows)
    out << r.trial << ',' << format_double(r.sigma2) << ',' << r.method << ',' << r.metric << ','
        << (std::isnan(r.value) ? std::string("nan") : format_double(r.value)) << '\n';
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << std::left << std::setw(8) << "sigma2" << std::setw(26) << "method" << std::setw(18) << "metric"
      << std::right << std::setw(7) << "n" << std::setw(13) << "median" << std::setw(13) << "q25"
      << std::setw(13) << "q75" << std::setw(13) << "mean" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(8) << format_double(r.sigma2) << std::setw(26) << r.method << std::setw(18)
        << r.metric << std::right << std::setw(7) << r.count << std::setprecision(6) << std::setw(13) << r.median
        << std::setw(13) << r.q25 << std::setw(13) << r.q75 << std::setw(13) << r.mean << '\n';
  }
}

double LandscapeResult::best_for(double s) const {
  for (std::size_t i = 0; i < sigma2_sq.size(); ++i)
    if (sigma2_sq[i] == s) return best[i];
  fail(ErrorKind::usage, "sigma2^2 value not in landscape grid");
}

LandscapeResult run_landscape(const LandscapeOptions& opts) {
  require(!opts.sigma2_sq_grid.empty(), "landscape needs at least one sigma2^2 value");
  require(opts.random_inits >= 0, "random init count must be nonnegative");
  require(!opts.methods.empty(), "landscape needs at least one method");
  for (double s : opts.sigma2_sq_grid) require(s > 0.0 && std::isfinite(s), "sigma2^2 values must be positive");

  const std::size_t G = opts.sigma2_sq_grid.size();
  std::vector<TruthModel> truths;
  std::vector<GroupedData> datasets;
  for (std::size_t s = 0; s < G; ++s) {
    truths.push_back(planted_truth(std::sqrt(opts.sigma2_sq_grid[s]), derive_seed(opts.seed, s, 1)));
    // All updates depend on Y only through Y Y'.
    datasets.push_back(compress_gram(generate(truths.back(), derive_seed(opts.seed, s, 2))));
  }

  const std::size_t inits = static_cast<std::size_t>(opts.random_inits) + 2;
  const std::size_t per_sigma = opts.methods.size() * inits;
  std::vector<LandscapeRun> runs(G * per_sigma);
  std::vector<std::string> warnings(runs.size());
  parallel_for(runs.size(), worker_count(opts.threads), [&](std::size_t u) {
    const std::size_t s = u / per_sigma;
    const VMethod method = opts.methods[(u % per_sigma) / inits];
    const std::size_t init = u % inits;
    FitConfig cfg;
    cfg.rank = kRank;
    cfg.v_method = method;
    cfg.max_iters = opts.max_iters;
    cfg.tol = opts.tol;
    LandscapeRun& run = runs[u];
    run.sigma2_sq = opts.sigma2_sq_grid[s];
    run.method = method;
    if (init == 0) {
      run.init = "oracle";
      cfg.init = InitKind::explicit_model;
      cfg.initial_model = truths[s].as_model();
    } else if (init == 1) {
      run.init = "ppca";
      cfg.init = InitKind::ppca;
    } else {
      run.init = "random" + std::to_string(init - 2);
      cfg.init = InitKind::random;
      cfg.seed = derive_seed(opts.seed, s, 100 + init);
    }
    try {
      FitResult r = fit(datasets[s], cfg);
      run.loglik = std::move(r.trace.loglik);
      run.converged = r.converged;
    } catch (const Error& e) {
      run.converged = false;
      warnings[u] = "sigma2^2 " + format_double(run.sigma2_sq) + ", " + std::string(to_string(method)) + ", " +
                    run.init + ": " + e.what();
    }
  });

  LandscapeResult res;
  res.sigma2_sq = opts.sigma2_sq_grid;
  res.best.assign(G, -std::numeric_limits<double>::infinity());
  for (std::size_t u = 0; u < runs.size(); ++u) {
    const std::size_t s = u / per_sigma;
    if (!runs[u].loglik.empty()) res.best[s] = std::max(res.best[s], runs[u].loglik.back());
    if (!warnings[u].empty()) res.warnings.push_back(warnings[u]);
  }
  res.runs = std::move(runs);
  return res;
}

void write_gaps_csv(std::ostream& out, const LandscapeResult& res) {
  out << "sigma2_sq,method,init,iteration,loglik,gap\n";
  for (const auto& run : res.runs) {
    const double best = res.best_for(run.sigma2_sq);
    for (std::size_t t = 0; t < run.loglik.size(); ++t)
      out << format_double(run.sigma2_sq) << ',' << to_string(run.method) << ',' << run.init << ',' << t << ','
          << format_double(run.loglik[t]) << ',' << format_double(best - run.loglik[t]) << '\n';
  }
}

std::vector<GroupCurves> minorizer_curves(const GroupedData& data, const MinorizerCurveOptions& opts) {
  require(opts.points >= 2, "need at least two grid points");
  require(opts.lo_factor > 0.0 && opts.lo_factor < 1.0 && opts.hi_factor > 1.0,
          "grid factors must satisfy 0 < lo < 1 < hi");
  const FactorModel model = init_ppca(data, opts.rank);
  const auto coeffs = v_coefficients(data, model);
  std::vector<GroupCurves> out;
  for (Index l = 0; l < data.num_groups(); ++l) {
    const VCoefficients& c = coeffs[static_cast<std::size_t>(l)];
    GroupCurves g;
    g.v_t = model.v()[l];
    g.rootfind = update_v_rootfind(c);
    g.em = update_v_em(c, g.v_t);
    g.doc = update_v_doc(c, g.v_t);
    g.quad = update_v_quadratic(c, g.v_t);
    g.cubic = update_v_cubic(c, g.v_t);
    const double lo = std::log(opts.lo_factor * g.v_t);
    const double hi = std::log(opts.hi_factor * g.v_t);
    for (int i = 0; i < opts.points; ++i)
      g.v.push_back(std::exp(lo + (hi - lo) * i / (opts.points - 1)));
    g.v.push_back(g.v_t);
    std::sort(g.v.begin(), g.v.end());
    g.v.erase(std::unique(g.v.begin(), g.v.end()), g.v.end());
    const double base = univariate_objective(c, g.v_t);
    for (double v : g.v) {
      g.objective.push_back(univariate_objective(c, v) - base);
      g.em_curve.push_back(eval_minorizer(MinorizerKind::em, c, v, g.v_t) - base);
      g.doc_curve.push_back(eval_minorizer(MinorizerKind::doc, c, v, g.v_t) - base);
      g.quad_curve.push_back(eval_minorizer(MinorizerKind::quad, c, v, g.v_t) - base);
      g.cubic_curve.push_back(eval_minorizer(MinorizerKind::cubic, c, v, g.v_t) - base);
    }
    out.push_back(std::move(g));
  }
  return out;
}

void write_curves_csv(std::ostream& out, const std::vector<GroupCurves>& curves,
                      const std::vector<std::string>& labels) {
  out << "group,v,objective,em,doc,quad,cubic\n";
  for (std::size_t l = 0; l < curves.size(); ++l) {
    const GroupCurves& g = curves[l];
    const std::string label = l < labels.size() ? labels[l] : "g" + std::to_string(l + 1);
    for (std::size_t i = 0; i < g.v.size(); ++i)
      out << label << ',' << format_double(g.v[i]) << ',' << format_double(g.objective[i]) << ','
          << format_double(g.em_curve[i]) << ',' << format_double(g.doc_curve[i]) << ','
          << format_double(g.quad_curve[i]) << ',' << format_double(g.cubic_curve[i]) << '\n';
  }
}

}  // namespace heppcat
