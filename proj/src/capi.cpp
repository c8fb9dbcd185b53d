#include "heppcat/heppcat.h"

#include "heppcat/error.hpp"
#include "heppcat/experiments.hpp"
#include "heppcat/fitter.hpp"
#include "heppcat/fupdate.hpp"
#include "heppcat/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <new>
#include <sstream>
#include <string>

using namespace heppcat;

struct heppcat_dataset {
  LabeledData labeled;
  bool centered = false;
  bool compressed = false;
};

struct heppcat_truth {
  TruthModel truth;
  std::uint64_t seed = 0;
};

struct heppcat_fit_result {
  FitResult result;
  std::vector<std::string> labels;
  nlohmann::json config_echo;
  std::uint64_t seed = 0;
  bool has_trace = false;
};

namespace {

thread_local std::string last_error;

heppcat_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return HEPPCAT_ERR_USAGE;
    case ErrorKind::domain: return HEPPCAT_ERR_DOMAIN;
    case ErrorKind::numerical: return HEPPCAT_ERR_NUMERICAL;
    case ErrorKind::degenerate: return HEPPCAT_ERR_DEGENERATE;
    case ErrorKind::io: return HEPPCAT_ERR_IO;
  }
  return HEPPCAT_ERR_INTERNAL;
}

template <class Fn>
heppcat_status guard(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return HEPPCAT_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return HEPPCAT_ERR_INTERNAL;
}

void require_ptr(const void* p, const char* name) { require(p != nullptr, std::string(name) + " must not be null"); }

std::vector<VMethod> parse_methods(const char* list) {
  require_ptr(list, "methods");
  std::vector<VMethod> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const VMethod m = parse_vmethod(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  require(!out.empty(), "method list is empty");
  return out;
}

std::vector<Index> to_index(const size_t* p, size_t n) {
  std::vector<Index> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = static_cast<Index>(p[i]);
  return out;
}

void emit(heppcat_text_sink sink, void* user, const std::string& text) {
  if (sink && !text.empty()) sink(text.c_str(), user);
}

void emit_warnings(heppcat_text_sink sink, void* user, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) emit(sink, user, "warning: " + w + "\n");
}

std::ofstream open_out(const char* path) {
  require_ptr(path, "output path");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, std::string("cannot open ") + path + " for writing");
  return out;
}

void close_out(std::ofstream& out, const char* path) {
  out.close();
  if (!out) fail(ErrorKind::io, std::string("failed writing ") + path);
}

}  // namespace

extern "C" {

const char* heppcat_version(void) { return "0.1.0"; }

const char* heppcat_last_error(void) { return last_error.c_str(); }

heppcat_status heppcat_dataset_read_csv(const char* path, heppcat_dataset** out) {
  return guard([&] {
    require_ptr(path, "path");
    require_ptr(out, "out");
    *out = new heppcat_dataset{read_dataset_csv(std::string(path))};
  });
}

heppcat_status heppcat_dataset_write_csv(const heppcat_dataset* ds, const char* path) {
  return guard([&] {
    require_ptr(ds, "dataset");
    require_ptr(path, "path");
    require(!ds->compressed, "compressed datasets cannot be written as samples");
    write_dataset_csv(std::string(path), ds->labeled);
  });
}

heppcat_status heppcat_dataset_from_matrix(size_t d, size_t n, const double* y, size_t num_groups,
                                           const size_t* group_sizes, heppcat_dataset** out) {
  return guard([&] {
    require_ptr(y, "y");
    require_ptr(group_sizes, "group_sizes");
    require_ptr(out, "out");
    require(num_groups > 0, "at least one group is required");
    const Eigen::Map<const Matrix> Y(y, static_cast<Index>(d), static_cast<Index>(n));
    std::vector<Matrix> blocks;
    Index col = 0;
    for (size_t l = 0; l < num_groups; ++l) {
      const auto n_l = static_cast<Index>(group_sizes[l]);
      require(col + n_l <= Y.cols(), "group sizes exceed the number of columns");
      blocks.push_back(Y.middleCols(col, n_l));
      col += n_l;
    }
    require(col == Y.cols(), "group sizes must add up to the number of columns");
    *out = new heppcat_dataset{label_default(GroupedData(std::move(blocks)))};
  });
}

void heppcat_dataset_free(heppcat_dataset* ds) { delete ds; }

size_t heppcat_dataset_dim(const heppcat_dataset* ds) { return static_cast<size_t>(ds->labeled.data.dim()); }

size_t heppcat_dataset_num_groups(const heppcat_dataset* ds) {
  return static_cast<size_t>(ds->labeled.data.num_groups());
}

size_t heppcat_dataset_group_size(const heppcat_dataset* ds, size_t group) {
  return static_cast<size_t>(ds->labeled.data.group_size(static_cast<Index>(group)));
}

const char* heppcat_dataset_group_label(const heppcat_dataset* ds, size_t group) {
  return group < ds->labeled.labels.size() ? ds->labeled.labels[group].c_str() : "";
}

heppcat_status heppcat_dataset_center(heppcat_dataset* ds) {
  return guard([&] {
    require_ptr(ds, "dataset");
    ds->labeled.data = center_groups(ds->labeled.data);
    ds->centered = true;
  });
}

heppcat_status heppcat_dataset_compress(heppcat_dataset* ds) {
  return guard([&] {
    require_ptr(ds, "dataset");
    ds->labeled.data = compress_gram(ds->labeled.data);
    ds->compressed = true;
  });
}

heppcat_status heppcat_dataset_loglik(const heppcat_dataset* ds, size_t k, const double* f, const double* v,
                                      double* out) {
  return guard([&] {
    require_ptr(ds, "dataset");
    require_ptr(f, "f");
    require_ptr(v, "v");
    require_ptr(out, "out");
    const GroupedData& data = ds->labeled.data;
    const Matrix F = Eigen::Map<const Matrix>(f, data.dim(), static_cast<Index>(k));
    const Vector vv = Eigen::Map<const Vector>(v, data.num_groups());
    *out = log_likelihood_parts(data, FactorModel::from_factor(F, vv));
  });
}

heppcat_status heppcat_truth_create(size_t d, size_t k, const double* lambdas, size_t num_groups,
                                    const double* variances, const size_t* group_sizes, uint64_t seed,
                                    heppcat_truth** out) {
  return guard([&] {
    require_ptr(lambdas, "lambdas");
    require_ptr(variances, "variances");
    require_ptr(group_sizes, "group_sizes");
    require_ptr(out, "out");
    require(d > 0 && k > 0 && k < d, "need 0 < k < d");
    require(num_groups > 0, "at least one group is required");
    const Vector lambda = Eigen::Map<const Vector>(lambdas, static_cast<Index>(k));
    const Vector v = Eigen::Map<const Vector>(variances, static_cast<Index>(num_groups));
    *out = new heppcat_truth{
        make_truth(static_cast<Index>(d), lambda, v, to_index(group_sizes, num_groups), seed), seed};
  });
}

heppcat_status heppcat_truth_set_feature_blocks(heppcat_truth* truth, size_t group, size_t num_blocks,
                                                const size_t* counts, const double* variances) {
  return guard([&] {
    require_ptr(truth, "truth");
    TruthModel t = truth->truth;
    require(group < static_cast<size_t>(t.num_groups()), "group index out of range");
    require(num_blocks == 0 || (counts && variances), "block arrays must not be null");
    t.feature_blocks.resize(static_cast<size_t>(t.num_groups()));
    t.feature_blocks[group].clear();
    for (size_t i = 0; i < num_blocks; ++i)
      t.feature_blocks[group].push_back({static_cast<Index>(counts[i]), variances[i]});
    t.validate();
    truth->truth = std::move(t);
  });
}

heppcat_status heppcat_truth_generate(const heppcat_truth* truth, uint64_t seed, heppcat_dataset** out) {
  return guard([&] {
    require_ptr(truth, "truth");
    require_ptr(out, "out");
    *out = new heppcat_dataset{label_default(generate(truth->truth, seed))};
  });
}

heppcat_status heppcat_truth_write_json(const heppcat_truth* truth, const char* path) {
  return guard([&] {
    require_ptr(truth, "truth");
    require_ptr(path, "path");
    write_json_file(path, to_json(truth->truth, truth->seed));
  });
}

void heppcat_truth_free(heppcat_truth* truth) { delete truth; }

void heppcat_fit_options_default(heppcat_fit_options* opts) {
  opts->rank = 1;
  opts->method = "em";
  opts->max_iters = 1000;
  opts->tol = 1e-6;
  opts->init = "ppca";
  opts->block_rule = "alternate";
  opts->seed = 0;
  opts->record_trace = 0;
}

heppcat_status heppcat_fit(const heppcat_dataset* ds, const heppcat_fit_options* opts, heppcat_fit_result** out) {
  return guard([&] {
    require_ptr(ds, "dataset");
    require_ptr(opts, "options");
    require_ptr(out, "out");
    require_ptr(opts->method, "method");
    require_ptr(opts->init, "init");
    require_ptr(opts->block_rule, "block_rule");
    FitConfig cfg;
    cfg.rank = static_cast<Index>(opts->rank);
    cfg.v_method = parse_vmethod(opts->method);
    cfg.max_iters = opts->max_iters;
    cfg.tol = opts->tol;
    cfg.init = parse_init(opts->init);
    require(cfg.init != InitKind::explicit_model, "init must be ppca or random");
    cfg.block_rule = parse_block_rule(opts->block_rule);
    cfg.seed = opts->seed;
    cfg.record_trace = opts->record_trace != 0;

    auto res = std::make_unique<heppcat_fit_result>();
    res->result = fit(ds->labeled.data, cfg);
    res->labels = ds->labeled.labels;
    res->seed = opts->seed;
    res->has_trace = cfg.record_trace;
    res->config_echo = {{"rank", opts->rank},
                        {"method", to_string(cfg.v_method)},
                        {"max_iters", opts->max_iters},
                        {"tol", opts->tol},
                        {"init", to_string(cfg.init)},
                        {"block_rule", to_string(cfg.block_rule)},
                        {"center", ds->centered},
                        {"compress", ds->compressed}};
    *out = res.release();
  });
}

void heppcat_fit_result_free(heppcat_fit_result* res) { delete res; }

int heppcat_fit_converged(const heppcat_fit_result* res) { return res->result.converged ? 1 : 0; }
int heppcat_fit_iterations(const heppcat_fit_result* res) { return res->result.iterations; }
double heppcat_fit_loglik(const heppcat_fit_result* res) { return res->result.loglik; }
size_t heppcat_fit_dim(const heppcat_fit_result* res) { return static_cast<size_t>(res->result.model.dim()); }
size_t heppcat_fit_rank(const heppcat_fit_result* res) { return static_cast<size_t>(res->result.model.rank()); }

size_t heppcat_fit_num_groups(const heppcat_fit_result* res) {
  return static_cast<size_t>(res->result.model.num_groups());
}

void heppcat_fit_factor(const heppcat_fit_result* res, double* f) {
  const Matrix& F = res->result.model.F();
  Eigen::Map<Matrix>(f, F.rows(), F.cols()) = F;
}

void heppcat_fit_variances(const heppcat_fit_result* res, double* v) {
  const Vector& vv = res->result.model.v();
  Eigen::Map<Vector>(v, vv.size()) = vv;
}

void heppcat_fit_lambdas(const heppcat_fit_result* res, double* lambdas) {
  const Vector& l = res->result.model.lambda();
  Eigen::Map<Vector>(lambdas, l.size()) = l;
}

size_t heppcat_fit_trace_length(const heppcat_fit_result* res) {
  return res->has_trace ? res->result.trace.loglik.size() : 0;
}

void heppcat_fit_trace_loglik(const heppcat_fit_result* res, double* loglik) {
  if (res->has_trace) std::copy(res->result.trace.loglik.begin(), res->result.trace.loglik.end(), loglik);
}

heppcat_status heppcat_fit_write_json(const heppcat_fit_result* res, const char* path) {
  return guard([&] {
    require_ptr(res, "result");
    require_ptr(path, "path");
    ModelRecord rec{.model = res->result.model};
    rec.groups = res->labels;
    rec.loglik = res->result.loglik;
    rec.converged = res->result.converged;
    rec.iterations = res->result.iterations;
    if (res->has_trace) rec.trace = res->result.trace;
    rec.config_echo = res->config_echo;
    rec.seed = res->seed;
    write_model_json(path, rec);
  });
}

void heppcat_benchmark_options_default(heppcat_benchmark_options* opts) {
  const BenchmarkOptions d;
  opts->preset = "fig3";
  opts->trials = d.trials;
  opts->sigma_grid = nullptr;
  opts->sigma_grid_len = 0;
  opts->methods = "em";
  opts->seed = d.seed;
  opts->max_iters = d.max_iters;
  opts->threads = 0;
}

void heppcat_landscape_options_default(heppcat_landscape_options* opts) {
  const LandscapeOptions d;
  opts->sigma2_sq_grid = nullptr;
  opts->sigma2_sq_grid_len = 0;
  opts->random_inits = d.random_inits;
  opts->methods = "rootfind,em,doc,quad,cubic";
  opts->seed = d.seed;
  opts->max_iters = d.max_iters;
  opts->tol = d.tol;
  opts->threads = 0;
}

heppcat_status heppcat_run_benchmark(const heppcat_benchmark_options* opts, const char* out_csv,
                                     heppcat_text_sink sink, void* user) {
  return guard([&] {
    require_ptr(opts, "options");
    require_ptr(opts->preset, "preset");
    BenchmarkOptions b;
    b.preset = opts->preset;
    if (!is_benchmark_preset(b.preset)) fail(ErrorKind::usage, "unknown preset '" + b.preset + "'");
    b.trials = opts->trials;
    if (opts->sigma_grid) b.sigma_grid.assign(opts->sigma_grid, opts->sigma_grid + opts->sigma_grid_len);
    b.methods = parse_methods(opts->methods);
    b.seed = opts->seed;
    b.max_iters = opts->max_iters;
    b.threads = opts->threads;
    std::ofstream out = open_out(out_csv);
    const BenchmarkResult res = run_benchmark(b);
    write_metrics_csv(out, res.rows);
    close_out(out, out_csv);
    std::ostringstream table;
    write_summary(table, summarize(res.rows));
    emit(sink, user, table.str());
    emit_warnings(sink, user, res.warnings);
  });
}

heppcat_status heppcat_run_landscape(const heppcat_landscape_options* opts, const char* out_csv,
                                     heppcat_text_sink sink, void* user) {
  return guard([&] {
    require_ptr(opts, "options");
    LandscapeOptions o;
    if (opts->sigma2_sq_grid) o.sigma2_sq_grid.assign(opts->sigma2_sq_grid, opts->sigma2_sq_grid + opts->sigma2_sq_grid_len);
    o.random_inits = opts->random_inits;
    o.methods = parse_methods(opts->methods);
    o.seed = opts->seed;
    o.max_iters = opts->max_iters;
    o.tol = opts->tol;
    o.threads = opts->threads;
    std::ofstream out = open_out(out_csv);
    const LandscapeResult res = run_landscape(o);
    write_gaps_csv(out, res);
    close_out(out, out_csv);

    std::ostringstream os;
    os << "log-likelihood without ln(2 pi) constants\n";
    os << std::left << std::setw(10) << "sigma2_sq" << std::setw(10) << "method" << std::right << std::setw(11)
       << "converged" << std::setw(16) << "best" << std::setw(16) << "max_final_gap" << std::setw(16)
       << "ppca_gap0" << '\n';
    for (std::size_t s = 0; s < res.sigma2_sq.size(); ++s) {
      for (VMethod m : o.methods) {
        int runs = 0, conv = 0;
        double max_gap = 0.0, ppca_gap = std::numeric_limits<double>::quiet_NaN();
        for (const auto& r : res.runs) {
          if (r.sigma2_sq != res.sigma2_sq[s] || r.method != m || r.loglik.empty()) continue;
          ++runs;
          if (r.converged) {
            ++conv;
            max_gap = std::max(max_gap, res.best[s] - r.loglik.back());
          }
          if (r.init == "ppca") ppca_gap = res.best[s] - r.loglik.front();
        }
        os << std::left << std::setw(10) << format_double(res.sigma2_sq[s]) << std::setw(10) << to_string(m)
           << std::right << std::setw(11) << (std::to_string(conv) + "/" + std::to_string(runs))
           << std::setprecision(10) << std::setw(16) << res.best[s] << std::setprecision(4) << std::setw(16)
           << max_gap << std::setw(16) << ppca_gap << '\n';
      }
    }
    emit(sink, user, os.str());
    emit_warnings(sink, user, res.warnings);
  });
}

heppcat_status heppcat_run_minorizers(const heppcat_dataset* ds, size_t rank, int points, const char* out_csv,
                                      heppcat_text_sink sink, void* user) {
  return guard([&] {
    require_ptr(ds, "dataset");
    MinorizerCurveOptions o;
    o.rank = static_cast<Index>(rank);
    o.points = points;
    std::ofstream out = open_out(out_csv);
    const auto curves = minorizer_curves(ds->labeled.data, o);
    write_curves_csv(out, curves, ds->labeled.labels);
    close_out(out, out_csv);

    std::ostringstream os;
    os << std::left << std::setw(10) << "group" << std::right;
    for (const char* h : {"v_t", "rootfind", "em", "doc", "quad", "cubic"}) os << std::setw(14) << h;
    os << '\n' << std::setprecision(6);
    for (std::size_t l = 0; l < curves.size(); ++l) {
      const GroupCurves& g = curves[l];
      os << std::left << std::setw(10) << ds->labeled.labels[l] << std::right;
      for (double x : {g.v_t, g.rootfind, g.em, g.doc, g.quad, g.cubic}) os << std::setw(14) << x;
      os << '\n';
    }
    emit(sink, user, os.str());
  });
}

}  // extern "C"
