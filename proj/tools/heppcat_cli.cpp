// heppcat command-line tool. Uses only the C interface of libheppcat.

#include "heppcat/heppcat.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitFailure = 4;

struct CliError {
  int code;
  std::string message;
};

int exit_code(heppcat_status s) {
  switch (s) {
    case HEPPCAT_OK: return kExitOk;
    case HEPPCAT_ERR_USAGE:
    case HEPPCAT_ERR_DOMAIN:
    case HEPPCAT_ERR_IO: return kExitUsage;
    default: return kExitFailure;
  }
}

void check(heppcat_status s) {
  if (s != HEPPCAT_OK) throw CliError{exit_code(s), heppcat_last_error()};
}

void print_sink(const char* text, void*) { std::fputs(text, stdout); }

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<heppcat_dataset, Deleter<heppcat_dataset, heppcat_dataset_free>>;
using Truth = std::unique_ptr<heppcat_truth, Deleter<heppcat_truth, heppcat_truth_free>>;
using FitResult = std::unique_ptr<heppcat_fit_result, Deleter<heppcat_fit_result, heppcat_fit_result_free>>;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    T v;
    if constexpr (std::is_floating_point_v<T>) v = static_cast<T>(std::stod(s, &pos));
    else {
      if (!s.empty() && s[0] == '-') throw std::invalid_argument(s);
      v = static_cast<T>(std::stoull(s, &pos));
    }
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw CliError{kExitUsage, "invalid " + what + " '" + s + "'"};
  }
}

template <class T>
std::vector<T> parse_list(const std::string& s, const std::string& what) {
  std::vector<T> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_number<T>(item, what));
  if (out.empty()) throw CliError{kExitUsage, what + " list is empty"};
  return out;
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

// ---- simulate ----

struct SimulateArgs {
  std::size_t d = 100;
  std::size_t k = 3;
  std::string lambdas = "4,2,1";
  std::string group_sizes = "200,800";
  std::string variances = "1,4";
  std::string feature_blocks;
  std::uint64_t seed = 0;
  std::string out = ".";
};

// "20:4,80:9" applies to every group; "20:4,80:9;" gives per-group entries
// separated by ';', an empty entry leaving that group homogeneous.
void apply_feature_blocks(heppcat_truth* truth, const std::string& text, std::size_t num_groups) {
  std::vector<std::string> per_group = split(text, ';');
  const bool shared = text.find(';') == std::string::npos;
  if (!shared && per_group.size() != num_groups)
    throw CliError{kExitUsage, "--feature-blocks needs one ';'-separated entry per group"};
  for (std::size_t l = 0; l < num_groups; ++l) {
    const std::string& entry = shared ? text : per_group[l];
    if (entry.empty()) continue;
    std::vector<std::size_t> counts;
    std::vector<double> vars;
    for (const auto& block : split(entry, ',')) {
      const auto colon = block.find(':');
      if (colon == std::string::npos) throw CliError{kExitUsage, "feature block '" + block + "' is not count:variance"};
      counts.push_back(parse_number<std::size_t>(block.substr(0, colon), "feature block count"));
      vars.push_back(parse_number<double>(block.substr(colon + 1), "feature block variance"));
    }
    check(heppcat_truth_set_feature_blocks(truth, l, counts.size(), counts.data(), vars.data()));
  }
}

int run_simulate(const SimulateArgs& a) {
  const auto lambdas = parse_list<double>(a.lambdas, "lambda");
  const auto sizes = parse_list<std::size_t>(a.group_sizes, "group size");
  const auto vars = parse_list<double>(a.variances, "variance");
  if (lambdas.size() != a.k) throw CliError{kExitUsage, "--lambdas must have k entries"};
  if (vars.size() != sizes.size()) throw CliError{kExitUsage, "--variances and --group-sizes differ in length"};

  heppcat_truth* raw_truth = nullptr;
  check(heppcat_truth_create(a.d, a.k, lambdas.data(), sizes.size(), vars.data(), sizes.data(), a.seed, &raw_truth));
  Truth truth(raw_truth);
  if (!a.feature_blocks.empty()) apply_feature_blocks(truth.get(), a.feature_blocks, sizes.size());

  heppcat_dataset* raw_ds = nullptr;
  check(heppcat_truth_generate(truth.get(), a.seed, &raw_ds));
  Dataset ds(raw_ds);

  std::error_code ec;
  std::filesystem::create_directories(a.out, ec);
  if (ec) throw CliError{kExitUsage, "cannot create " + a.out + ": " + ec.message()};
  const std::string data_path = join_path(a.out, "data.csv");
  const std::string truth_path = join_path(a.out, "truth.json");
  check(heppcat_dataset_write_csv(ds.get(), data_path.c_str()));
  check(heppcat_truth_write_json(truth.get(), truth_path.c_str()));
  std::cout << "wrote " << data_path << " and " << truth_path << '\n';
  return kExitOk;
}

// ---- fit ----

struct FitArgs {
  std::string data;
  std::size_t rank = 1;
  std::string method = "em";
  int max_iters = 1000;
  double tol = 1e-6;
  std::string init = "ppca";
  std::string block_rule = "alternate";
  std::uint64_t seed = 0;
  bool center = false;
  bool compress = false;
  bool trace = false;
  std::string out = "model.json";
};

Dataset load_dataset(const std::string& path) {
  heppcat_dataset* raw = nullptr;
  const heppcat_status s = heppcat_dataset_read_csv(path.c_str(), &raw);
  // Unreadable input is reported as a usage problem.
  if (s != HEPPCAT_OK) throw CliError{kExitUsage, heppcat_last_error()};
  return Dataset(raw);
}

int run_fit(const FitArgs& a) {
  Dataset ds = load_dataset(a.data);
  if (a.rank >= heppcat_dataset_dim(ds.get()))
    throw CliError{kExitUsage, "--rank must be smaller than the data dimension"};
  if (a.center) check(heppcat_dataset_center(ds.get()));
  if (a.compress) check(heppcat_dataset_compress(ds.get()));

  heppcat_fit_options opts;
  heppcat_fit_options_default(&opts);
  opts.rank = a.rank;
  opts.method = a.method.c_str();
  opts.max_iters = a.max_iters;
  opts.tol = a.tol;
  opts.init = a.init.c_str();
  opts.block_rule = a.block_rule.c_str();
  opts.seed = a.seed;
  opts.record_trace = a.trace ? 1 : 0;

  heppcat_fit_result* raw = nullptr;
  check(heppcat_fit(ds.get(), &opts, &raw));
  FitResult res(raw);
  check(heppcat_fit_write_json(res.get(), a.out.c_str()));

  const std::size_t L = heppcat_fit_num_groups(res.get());
  std::vector<double> v(L), lambdas(heppcat_fit_rank(res.get()));
  heppcat_fit_variances(res.get(), v.data());
  heppcat_fit_lambdas(res.get(), lambdas.data());
  const bool converged = heppcat_fit_converged(res.get()) != 0;
  std::printf("%s after %d iterations\n", converged ? "converged" : "not converged (max iterations reached)",
              heppcat_fit_iterations(res.get()));
  std::printf("loglik %.12g (ln(2 pi) constants omitted)\n", heppcat_fit_loglik(res.get()));
  for (std::size_t l = 0; l < L; ++l)
    std::printf("v[%s] = %.8g\n", heppcat_dataset_group_label(ds.get(), l), v[l]);
  for (std::size_t j = 0; j < lambdas.size(); ++j) std::printf("lambda[%zu] = %.8g\n", j + 1, lambdas[j]);
  std::printf("model written to %s\n", a.out.c_str());
  return converged ? kExitOk : kExitNotConverged;
}

// ---- benchmark / landscape / minorizers ----

struct BenchmarkArgs {
  std::string preset = "fig3";
  int trials = 20;
  std::string sigma_grid;
  std::string methods = "em";
  std::uint64_t seed = 0;
  int max_iters = 100;
  unsigned threads = 0;
  std::string out = "metrics.csv";
};

int run_benchmark(const BenchmarkArgs& a) {
  heppcat_benchmark_options opts;
  heppcat_benchmark_options_default(&opts);
  std::vector<double> grid;
  if (!a.sigma_grid.empty()) grid = parse_list<double>(a.sigma_grid, "sigma value");
  opts.preset = a.preset.c_str();
  opts.trials = a.trials;
  opts.sigma_grid = grid.empty() ? nullptr : grid.data();
  opts.sigma_grid_len = grid.size();
  opts.methods = a.methods.c_str();
  opts.seed = a.seed;
  opts.max_iters = a.max_iters;
  opts.threads = a.threads;
  check(heppcat_run_benchmark(&opts, a.out.c_str(), print_sink, nullptr));
  std::cout << "metrics written to " << a.out << '\n';
  return kExitOk;
}

struct LandscapeArgs {
  std::string grid = "0.1,1.0,2.0,3.0";
  int random_inits = 20;
  std::string methods = "rootfind,em,doc,quad,cubic";
  std::uint64_t seed = 0;
  int max_iters = 1000;
  double tol = 1e-6;
  unsigned threads = 0;
  std::string out = "gaps.csv";
};

int run_landscape(const LandscapeArgs& a) {
  heppcat_landscape_options opts;
  heppcat_landscape_options_default(&opts);
  const auto grid = parse_list<double>(a.grid, "sigma2^2 value");
  opts.sigma2_sq_grid = grid.data();
  opts.sigma2_sq_grid_len = grid.size();
  opts.random_inits = a.random_inits;
  opts.methods = a.methods.c_str();
  opts.seed = a.seed;
  opts.max_iters = a.max_iters;
  opts.tol = a.tol;
  opts.threads = a.threads;
  check(heppcat_run_landscape(&opts, a.out.c_str(), print_sink, nullptr));
  std::cout << "gaps written to " << a.out << '\n';
  return kExitOk;
}

struct MinorizerArgs {
  std::string data;
  std::size_t rank = 3;
  int points = 201;
  bool center = false;
  std::uint64_t seed = 0;
  std::string out = "curves.csv";
};

int run_minorizers(const MinorizerArgs& a) {
  Dataset ds;
  if (!a.data.empty()) {
    ds = load_dataset(a.data);
  } else {
    // Default simulated preset.
    const double lambdas[] = {4.0, 2.0, 1.0};
    const double vars[] = {1.0, 4.0};
    const std::size_t sizes[] = {200, 800};
    heppcat_truth* raw_truth = nullptr;
    check(heppcat_truth_create(100, 3, lambdas, 2, vars, sizes, a.seed, &raw_truth));
    Truth truth(raw_truth);
    heppcat_dataset* raw = nullptr;
    check(heppcat_truth_generate(truth.get(), a.seed, &raw));
    ds.reset(raw);
  }
  if (a.center) check(heppcat_dataset_center(ds.get()));
  check(heppcat_run_minorizers(ds.get(), a.rank, a.points, a.out.c_str(), print_sink, nullptr));
  std::cout << "curves written to " << a.out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heteroscedastic probabilistic PCA across sample groups"};
  app.require_subcommand(1);
  app.set_version_flag("--version", heppcat_version());

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw a synthetic grouped dataset (data.csv, truth.json)");
  simulate->add_option("--d", sim.d, "Ambient dimension")->check(CLI::PositiveNumber);
  simulate->add_option("--k", sim.k, "Latent rank")->check(CLI::PositiveNumber);
  simulate->add_option("--lambdas", sim.lambdas, "Comma-separated factor variances");
  simulate->add_option("--group-sizes", sim.group_sizes, "Comma-separated samples per group");
  simulate->add_option("--variances", sim.variances, "Comma-separated noise variance per group");
  simulate->add_option("--feature-blocks", sim.feature_blocks,
                       "Per-feature noise, count:variance pairs; ';' separates groups");
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--out", sim.out, "Output directory");

  FitArgs fa;
  auto* fitcmd = app.add_subcommand("fit", "Fit a heteroscedastic PPCA model to a grouped CSV");
  fitcmd->add_option("--data", fa.data, "Dataset CSV")->required();
  fitcmd->add_option("--rank", fa.rank, "Latent rank k")->check(CLI::PositiveNumber);
  fitcmd->add_option("--method", fa.method, "Noise variance update")
      ->check(CLI::IsMember({"rootfind", "em", "doc", "quad", "cubic"}));
  fitcmd->add_option("--max-iters", fa.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  fitcmd->add_option("--tol", fa.tol, "Relative change tolerance on F")->check(CLI::NonNegativeNumber);
  fitcmd->add_option("--init", fa.init, "Initialization")->check(CLI::IsMember({"ppca", "random"}));
  fitcmd->add_option("--block-rule", fa.block_rule, "Block selection")
      ->check(CLI::IsMember({"alternate", "max-improvement"}));
  fitcmd->add_option("--seed", fa.seed, "Seed for random initialization");
  fitcmd->add_flag("--center", fa.center, "Subtract each group's mean first");
  fitcmd->add_flag("--compress", fa.compress, "Replace groups by Gram factors before fitting");
  fitcmd->add_flag("--trace", fa.trace, "Store the per-iteration trace in the model file");
  fitcmd->add_option("--out", fa.out, "Model JSON path");

  BenchmarkArgs ba;
  auto* bench = app.add_subcommand("benchmark", "Monte Carlo sweep over the planted two-group setup");
  bench->add_option("--preset", ba.preset, "fig3 | fig4 | fig5 | fig6-blocks | fig7");
  bench->add_option("--trials", ba.trials, "Trials per grid point")->check(CLI::PositiveNumber);
  bench->add_option("--sigma-grid", ba.sigma_grid, "Comma-separated sigma2 values (noise std of group 2)");
  bench->add_option("--methods", ba.methods, "Comma-separated variance updates");
  bench->add_option("--seed", ba.seed, "Random seed");
  bench->add_option("--max-iters", ba.max_iters, "Iterations per fit")->check(CLI::PositiveNumber);
  bench->add_option("--threads", ba.threads, "Worker threads (0: HEPPCAT_THREADS or all cores)");
  bench->add_option("--out", ba.out, "Metrics CSV path");

  LandscapeArgs la;
  auto* land = app.add_subcommand("landscape", "Multi-start runs and gaps to the best likelihood");
  land->add_option("--sigma2-squared-grid", la.grid, "Comma-separated noise variances of group 2");
  land->add_option("--random-inits", la.random_inits, "Random starts per setting")->check(CLI::NonNegativeNumber);
  land->add_option("--methods", la.methods, "Comma-separated variance updates");
  land->add_option("--seed", la.seed, "Random seed");
  land->add_option("--max-iters", la.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  land->add_option("--tol", la.tol, "Relative change tolerance on F")->check(CLI::NonNegativeNumber);
  land->add_option("--threads", la.threads, "Worker threads (0: HEPPCAT_THREADS or all cores)");
  land->add_option("--out", la.out, "Gaps CSV path");

  MinorizerArgs ma;
  auto* mino = app.add_subcommand("minorizers", "Objective and minorizer curves at the PPCA start");
  mino->add_option("--data", ma.data, "Dataset CSV (default: simulated preset)");
  mino->add_option("--rank", ma.rank, "Latent rank k")->check(CLI::PositiveNumber);
  mino->add_option("--points", ma.points, "Grid points")->check(CLI::Range(2, 1000000));
  mino->add_flag("--center", ma.center, "Subtract each group's mean first");
  mino->add_option("--seed", ma.seed, "Seed of the simulated preset");
  mino->add_option("--out", ma.out, "Curves CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*fitcmd) return run_fit(fa);
    if (*bench) return run_benchmark(ba);
    if (*land) return run_landscape(la);
    if (*mino) return run_minorizers(ma);
  } catch (const CliError& e) {
    std::cerr << "heppcat: " << e.message << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "heppcat: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
