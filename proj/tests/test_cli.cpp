// Runs the heppcat executable end to end. HEPPCAT_CLI is the binary path.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "heppcat/heppcat.h"
#include "json.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string output;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(HEPPCAT_CLI) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path workdir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "heppcat_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

}  // namespace

TEST_CASE("simulate writes the default preset") {
  const fs::path dir = workdir("simulate");
  const Run r = cli("simulate --seed 1 --out " + q(dir));
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir / "data.csv");
  REQUIRE(rows.size() == 1001);
  CHECK(rows[0][0] == "group");
  for (const auto& row : rows) CHECK(row.size() == 101);
  const json truth = load_json(dir / "truth.json");
  CHECK(truth["d"] == 100);
  CHECK(truth["k"] == 3);
  CHECK(truth["L"] == 2);
  CHECK(truth["lambda_true"].size() == 3);
  CHECK(truth["U_true"].size() == 100);
}

TEST_CASE("usage errors and exit codes") {
  const fs::path dir = workdir("exit_codes");
  REQUIRE(cli("simulate --seed 2 --out " + q(dir)).code == 0);
  const std::string data = q(dir / "data.csv");
  CHECK(cli("fit --data " + data + " --rank 100 --out " + q(dir / "m.json")).code == 2);
  CHECK(cli("fit --data " + q(dir / "missing.csv") + " --out " + q(dir / "m.json")).code == 2);
  CHECK(cli("fit --data " + data + " --method newton").code == 2);
  CHECK(cli("simulate --k 3 --lambdas 1,2 --out " + q(dir)).code == 2);
  CHECK(cli("simulate --variances 1,2,3 --out " + q(dir)).code == 2);
  CHECK(cli("benchmark --preset fig99 --out " + q(dir / "x.csv")).code == 2);
  CHECK(cli("").code == 2);
  CHECK(cli("--help").code == 0);

  const Run capped = cli("fit --data " + data + " --rank 3 --max-iters 1 --tol 0 --out " + q(dir / "capped.json"));
  CHECK(capped.code == 3);
  CHECK(fs::exists(dir / "capped.json"));
  CHECK(load_json(dir / "capped.json")["F"].size() == 100);

  // All-zero data: the PPCA start has no residual spectrum.
  std::ofstream zero(dir / "zero.csv");
  zero << "group,x1,x2,x3\n";
  for (int i = 0; i < 4; ++i) zero << "a,0,0,0\n";
  zero.close();
  const Run degenerate = cli("fit --data " + q(dir / "zero.csv") + " --rank 1 --out " + q(dir / "z.json"));
  CHECK(degenerate.code == 4);
}

TEST_CASE("fixed seeds give byte-identical artifacts") {
  const fs::path a = workdir("repro_a"), b = workdir("repro_b");
  for (const fs::path& dir : {a, b}) {
    REQUIRE(cli("simulate --seed 7 --out " + q(dir)).code == 0);
    REQUIRE(cli("fit --data " + q(dir / "data.csv") + " --rank 3 --init random --seed 5 --trace --out " +
                q(dir / "model.json"))
                .code == 0);
    REQUIRE(cli("benchmark --preset fig3 --trials 2 --sigma-grid 0.5,2 --max-iters 5 --seed 3 --out " +
                q(dir / "metrics.csv"))
                .code == 0);
    REQUIRE(cli("landscape --sigma2-squared-grid 1 --random-inits 2 --methods em,quad --max-iters 50 --seed 3 "
                "--out " +
                q(dir / "gaps.csv"))
                .code == 0);
    REQUIRE(cli("minorizers --seed 3 --points 31 --out " + q(dir / "curves.csv")).code == 0);
  }
  for (const char* f : {"data.csv", "truth.json", "model.json", "metrics.csv", "gaps.csv", "curves.csv"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("worker count does not change benchmark output") {
  const fs::path dir = workdir("threads");
  const std::string common = "benchmark --preset fig4 --trials 3 --sigma-grid 1,2 --max-iters 5 --seed 9 ";
  REQUIRE(cli(common + "--threads 1 --out " + q(dir / "one.csv")).code == 0);
  REQUIRE(cli(common + "--threads 3 --out " + q(dir / "three.csv")).code == 0);
  CHECK(slurp(dir / "one.csv") == slurp(dir / "three.csv"));
}

TEST_CASE("benchmark writes long-format metrics and a summary") {
  const fs::path dir = workdir("benchmark");
  const Run r = cli("benchmark --preset fig3 --trials 3 --sigma-grid 1 --max-iters 10 --out " + q(dir / "m.csv"));
  REQUIRE(r.code == 0);
  CHECK(r.output.find("median") != std::string::npos);
  const auto rows = read_csv(dir / "m.csv");
  REQUIRE(rows.size() > 1);
  CHECK(rows[0] == std::vector<std::string>{"trial", "sigma2", "method", "metric", "value"});
  std::map<std::string, int> methods;
  for (std::size_t i = 1; i < rows.size(); ++i) ++methods[rows[i][2]];
  for (const char* m : {"heppcat-em", "ppca-full", "ppca-group1", "ppca-group2"}) CHECK(methods.count(m) == 1);
}

TEST_CASE("fitted noise variances follow the planted ordering") {
  const fs::path dir = workdir("ordering");
  std::vector<double> diff;
  for (int seed = 0; seed < 20; ++seed) {
    REQUIRE(cli("simulate --seed " + std::to_string(100 + seed) + " --out " + q(dir)).code == 0);
    REQUIRE(cli("fit --data " + q(dir / "data.csv") + " --rank 3 --method em --out " + q(dir / "model.json")).code ==
            0);
    const json m = load_json(dir / "model.json");
    diff.push_back(m["v"][1].get<double>() - m["v"][0].get<double>());
  }
  CHECK(median(diff) > 0);
}

TEST_CASE("rootfind and em agree on the final likelihood") {
  const fs::path dir = workdir("agreement");
  REQUIRE(cli("simulate --seed 11 --out " + q(dir)).code == 0);
  std::map<std::string, double> ll;
  for (const char* m : {"rootfind", "em"}) {
    REQUIRE(cli("fit --data " + q(dir / "data.csv") + " --rank 3 --method " + m + " --out " + q(dir / "m.json"))
                .code == 0);
    ll[m] = load_json(dir / "m.json")["loglik"].get<double>();
  }
  CHECK(std::abs(ll["rootfind"] - ll["em"]) <= 1e-4 * std::abs(ll["em"]));
}

TEST_CASE("feature-blocked noise has the requested per-feature variance") {
  const fs::path dir = workdir("blocks");
  REQUIRE(cli("simulate --seed 12 --group-sizes 5000,5000 --feature-blocks 20:4,80:9 --out " + q(dir)).code == 0);
  const json truth = load_json(dir / "truth.json");
  const auto rows = read_csv(dir / "data.csv");
  std::vector<double> sumsq(100, 0.0);
  for (std::size_t i = 1; i < rows.size(); ++i)
    for (std::size_t f = 0; f < 100; ++f) {
      const double x = std::stod(rows[i][f + 1]);
      sumsq[f] += x * x;
    }
  const double n = static_cast<double>(rows.size() - 1);
  double worst = 0;
  for (std::size_t f = 0; f < 100; ++f) {
    double signal = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      const double u = truth["U_true"][f][j].get<double>();
      signal += truth["lambda_true"][j].get<double>() * u * u;
    }
    const double expected = signal + (f < 20 ? 4.0 : 9.0);
    worst = std::max(worst, std::abs(sumsq[f] / n - expected) / expected);
  }
  CHECK(worst <= 0.10);
}

TEST_CASE("file pipeline matches the in-memory pipeline") {
  const fs::path dir = workdir("readback");
  const uint64_t seed = 13;
  REQUIRE(cli("simulate --seed 13 --out " + q(dir)).code == 0);
  REQUIRE(cli("fit --data " + q(dir / "data.csv") + " --rank 3 --method cubic --out " + q(dir / "m.json")).code == 0);
  const json m = load_json(dir / "m.json");

  const double lambdas[] = {4, 2, 1};
  const double variances[] = {1, 4};
  const size_t sizes[] = {200, 800};
  heppcat_truth* truth = nullptr;
  REQUIRE(heppcat_truth_create(100, 3, lambdas, 2, variances, sizes, seed, &truth) == HEPPCAT_OK);
  heppcat_dataset* ds = nullptr;
  REQUIRE(heppcat_truth_generate(truth, seed, &ds) == HEPPCAT_OK);
  heppcat_fit_options opts;
  heppcat_fit_options_default(&opts);
  opts.rank = 3;
  opts.method = "cubic";
  heppcat_fit_result* res = nullptr;
  REQUIRE(heppcat_fit(ds, &opts, &res) == HEPPCAT_OK);

  const double ll = heppcat_fit_loglik(res);
  CHECK(std::abs(m["loglik"].get<double>() - ll) <= 1e-12 * std::abs(ll));
  std::vector<double> f(300), v(2);
  heppcat_fit_factor(res, f.data());
  heppcat_fit_variances(res, v.data());
  for (int l = 0; l < 2; ++l) CHECK(std::abs(m["v"][l].get<double>() - v[l]) <= 1e-12 * v[l]);
  double worst = 0, scale = 0;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 3; ++j) {
      worst = std::max(worst, std::abs(m["F"][i][j].get<double>() - f[j * 100 + i]));
      scale = std::max(scale, std::abs(f[j * 100 + i]));
    }
  CHECK(worst <= 1e-12 * scale);
  heppcat_fit_result_free(res);
  heppcat_dataset_free(ds);
  heppcat_truth_free(truth);
}

TEST_CASE("minorizer curves") {
  const fs::path dir = workdir("minorizers");
  const Run r = cli("minorizers --seed 14 --out " + q(dir / "curves.csv"));
  REQUIRE(r.code == 0);
  // Summary rows: group, v_t, rootfind, em, doc, quad, cubic.
  std::map<std::string, double> rootfind;
  std::istringstream summary(r.output);
  std::string line;
  while (std::getline(summary, line)) {
    std::istringstream ls(line);
    std::string group;
    double v_t, root;
    if (ls >> group >> v_t >> root) rootfind[group] = root;
  }
  REQUIRE(rootfind.size() == 2);

  const auto rows = read_csv(dir / "curves.csv");
  REQUIRE(rows[0] == std::vector<std::string>{"group", "v", "objective", "em", "doc", "quad", "cubic"});
  std::map<std::string, std::vector<std::vector<double>>> by_group;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<double> vals;
    for (std::size_t c = 1; c < rows[i].size(); ++c) vals.push_back(std::stod(rows[i][c]));
    by_group[rows[i][0]].push_back(vals);
  }
  REQUIRE(by_group.size() == 2);
  for (const auto& [group, pts] : by_group) {
    CAPTURE(group);
    int anchors = 0;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& p = pts[i];
      for (std::size_t c = 2; c < p.size(); ++c) CHECK(p[c] <= p[1] + 1e-9);
      // The anchor v_t is a grid point where every curve vanishes.
      if (std::all_of(p.begin() + 1, p.end(), [](double x) { return x == 0.0; })) ++anchors;
      if (p[1] > pts[argmax][1]) argmax = i;
    }
    CHECK(anchors == 1);
    REQUIRE(argmax > 0);
    REQUIRE(argmax + 1 < pts.size());
    CHECK(rootfind[group] >= pts[argmax - 1][0]);
    CHECK(rootfind[group] <= pts[argmax + 1][0]);
  }
}

TEST_CASE("landscape gaps") {
  const fs::path dir = workdir("landscape");
  const Run r = cli("landscape --sigma2-squared-grid 1,3 --random-inits 4 --methods em,rootfind --seed 15 --out " +
                    q(dir / "gaps.csv"));
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir / "gaps.csv");
  REQUIRE(rows[0] == std::vector<std::string>{"sigma2_sq", "method", "init", "iteration", "loglik", "gap"});
  // (sigma2_sq, method, init) -> loglik trace.
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<double>> traces;
  std::map<std::string, double> ppca_gap0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    traces[{row[0], row[1], row[2]}].push_back(std::stod(row[4]));
    CHECK(std::stod(row[5]) >= -1e-9 * std::abs(std::stod(row[4])));
    if (row[2] == "ppca" && row[3] == "0") ppca_gap0[row[0] + row[1]] = std::stod(row[5]);
  }
  CHECK(traces.size() == 2 * 2 * 6);
  for (const char* m : {"em", "rootfind"}) CHECK(ppca_gap0[std::string("1") + m] <= ppca_gap0[std::string("3") + m]);
  for (const auto& [key, trace] : traces) {
    const auto& [s, m, init] = key;
    if (init.rfind("random", 0) != 0) continue;
    CHECK(traces[{s, m, "oracle"}].front() >= trace.front());
  }
}
