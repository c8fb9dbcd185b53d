#pragma once

// Simulation harnesses behind the CLI: metric sweeps over planted data,
// multi-start landscape runs and minorizer curve dumps.
//
// The planted setup throughout is d = 100, k = 3, lambda = (4, 2, 1), group
// sizes (200, 800) and noise variances (1, sigma2^2).

#include "heppcat/model.hpp"
#include "heppcat/simgen.hpp"
#include "heppcat/vupdate.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace heppcat {

struct MetricRow {
  int trial;
  double sigma2;
  std::string method;
  std::string metric;
  double value;
};

struct SummaryRow {
  double sigma2;
  std::string method;
  std::string metric;
  std::size_t count;
  double median;
  double q25;
  double q75;
  double mean;
};

struct BenchmarkOptions {
  std::string preset = "fig3";  // fig3 | fig4 | fig5 | fig6-blocks | fig7
  int trials = 20;
  std::vector<double> sigma_grid;  // empty: preset default
  std::vector<VMethod> methods{VMethod::em};
  std::uint64_t seed = 0;
  int max_iters = 100;
  unsigned threads = 0;  // 0: HEPPCAT_THREADS, else all cores
};

struct BenchmarkResult {
  std::vector<MetricRow> rows;  // sorted by (trial, sigma2, method), stable
  std::vector<std::string> warnings;
};

bool is_benchmark_preset(const std::string& name);
std::vector<double> default_sigma_grid(const std::string& preset);

/// Planted truth of the sweep experiments for a given sigma2.
TruthModel planted_truth(double sigma2, std::uint64_t seed);

BenchmarkResult run_benchmark(const BenchmarkOptions& opts);
std::vector<SummaryRow> summarize(const std::vector<MetricRow>& rows);
void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);

struct LandscapeOptions {
  std::vector<double> sigma2_sq_grid{0.1, 1.0, 2.0, 3.0};
  int random_inits = 20;
  std::vector<VMethod> methods{VMethod::rootfind, VMethod::em, VMethod::doc, VMethod::quad, VMethod::cubic};
  std::uint64_t seed = 0;
  int max_iters = 1000;
  double tol = 1e-6;
  unsigned threads = 0;
};

struct LandscapeRun {
  double sigma2_sq;
  VMethod method;
  std::string init;  // "oracle", "ppca" or "random<i>"
  std::vector<double> loglik;  // per iteration, entry 0 is the initial model
  bool converged;
};

struct LandscapeResult {
  std::vector<LandscapeRun> runs;
  std::vector<double> sigma2_sq;  // grid, in order
  std::vector<double> best;       // best converged log-likelihood per grid entry
  std::vector<std::string> warnings;

  double best_for(double sigma2_sq) const;
};

LandscapeResult run_landscape(const LandscapeOptions& opts);
/// Long-format gaps: sigma2_sq, method, init, iteration, loglik, gap.
void write_gaps_csv(std::ostream& out, const LandscapeResult& res);

struct MinorizerCurveOptions {
  Index rank = 3;
  int points = 201;
  double lo_factor = 0.1;   // grid spans [lo_factor * v_t, hi_factor * v_t]
  double hi_factor = 10.0;
};

struct GroupCurves {
  double v_t;
  double rootfind;  // global maximizer of L_l
  double em, doc, quad, cubic;  // one-step updates from v_t
  std::vector<double> v;
  // All shifted so that they vanish at v_t.
  std::vector<double> objective, em_curve, doc_curve, quad_curve, cubic_curve;
};

/// Curves of L_l and the four anchored minorizers at the homoscedastic PPCA
/// initialization, one set per group.
std::vector<GroupCurves> minorizer_curves(const GroupedData& data, const MinorizerCurveOptions& opts);
void write_curves_csv(std::ostream& out, const std::vector<GroupCurves>& curves,
                      const std::vector<std::string>& labels);

/// Worker count from HEPPCAT_THREADS (0 or unset: all cores).
unsigned worker_count(unsigned requested);

}  // namespace heppcat
