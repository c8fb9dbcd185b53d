#include "heppcat/io.hpp"

#include "heppcat/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace heppcat {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view s, std::size_t row, std::size_t col) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(x))
    fail(ErrorKind::io, "row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                            ": not a finite number: '" + std::string(s) + "'");
  return x;
}

json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json r = json::array();
    for (Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

double json_number(const json& x) {
  if (x.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!x.is_number()) fail(ErrorKind::io, "expected a number in JSON record");
  return x.get<double>();
}

Matrix matrix_from_json(const json& j, Index rows, Index cols, const char* name) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    fail(ErrorKind::io, std::string(name) + " must have " + std::to_string(rows) + " rows");
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& r = j[static_cast<std::size_t>(i)];
    if (!r.is_array() || static_cast<Index>(r.size()) != cols)
      fail(ErrorKind::io, std::string(name) + " row " + std::to_string(i) + " must have " + std::to_string(cols) + " entries");
    for (Index c = 0; c < cols; ++c) M(i, c) = json_number(r[static_cast<std::size_t>(c)]);
  }
  return M;
}

Vector vector_from_json(const json& j, Index size, const char* name) {
  if (!j.is_array() || static_cast<Index>(j.size()) != size)
    fail(ErrorKind::io, std::string(name) + " must have " + std::to_string(size) + " entries");
  Vector v(size);
  for (Index i = 0; i < size; ++i) v[i] = json_number(j[static_cast<std::size_t>(i)]);
  return v;
}

std::vector<double> doubles_from_json(const json& j) {
  std::vector<double> out;
  if (!j.is_array()) fail(ErrorKind::io, "expected an array in trace");
  for (const auto& x : j) out.push_back(json_number(x));
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) fail(ErrorKind::io, "cannot format number");
  return std::string(buf, ptr);
}

LabeledData read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line)) fail(ErrorKind::io, "dataset is empty (missing header)");
  const auto header = split_csv(line);
  if (header.empty() || header.front() != "group")
    fail(ErrorKind::io, "row 1: header must start with a 'group' column");
  const std::size_t d = header.size() - 1;
  if (d == 0) fail(ErrorKind::io, "row 1: header names no feature columns");

  LabeledData out;
  for (std::size_t i = 1; i < header.size(); ++i) out.feature_names.emplace_back(header[i]);

  std::map<std::string, std::size_t, std::less<>> index;
  std::vector<std::vector<double>> columns;  // per group, column-major samples
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != d + 1)
      fail(ErrorKind::io, "row " + std::to_string(row) + ": expected " + std::to_string(d + 1) +
                              " fields, found " + std::to_string(fields.size()));
    if (fields.front().empty()) fail(ErrorKind::io, "row " + std::to_string(row) + ": empty group label");
    auto it = index.find(fields.front());
    if (it == index.end()) {
      it = index.emplace(std::string(fields.front()), out.labels.size()).first;
      out.labels.emplace_back(fields.front());
      columns.emplace_back();
    }
    auto& col = columns[it->second];
    for (std::size_t i = 0; i < d; ++i) col.push_back(parse_number(fields[i + 1], row, i + 1));
  }
  if (out.labels.empty()) fail(ErrorKind::io, "dataset has no samples");

  std::vector<Matrix> blocks;
  for (const auto& col : columns) {
    const Index n = static_cast<Index>(col.size() / d);
    blocks.push_back(Eigen::Map<const Matrix>(col.data(), static_cast<Index>(d), n));
  }
  out.data = GroupedData(std::move(blocks));
  return out;
}

LabeledData read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open dataset '" + path + "'");
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const LabeledData& data) {
  const Index d = data.data.dim();
  require(static_cast<Index>(data.feature_names.size()) == d, "feature name count mismatch");
  require(static_cast<Index>(data.labels.size()) == data.data.num_groups(), "label count mismatch");
  out << "group";
  for (const auto& f : data.feature_names) out << ',' << f;
  out << '\n';
  for (Index l = 0; l < data.data.num_groups(); ++l) {
    const Matrix& Y = data.data.block(l);
    for (Index i = 0; i < Y.cols(); ++i) {
      out << data.labels[static_cast<std::size_t>(l)];
      for (Index r = 0; r < d; ++r) out << ',' << format_double(Y(r, i));
      out << '\n';
    }
  }
}

void write_dataset_csv(const std::string& path, const LabeledData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
  write_dataset_csv(out, data);
  if (!out) fail(ErrorKind::io, "write failed for '" + path + "'");
}

LabeledData label_default(GroupedData data) {
  LabeledData out;
  for (Index l = 0; l < data.num_groups(); ++l) out.labels.push_back("g" + std::to_string(l + 1));
  for (Index i = 0; i < data.dim(); ++i) out.feature_names.push_back("x" + std::to_string(i + 1));
  out.data = std::move(data);
  return out;
}

GroupedData center_groups(const GroupedData& data) {
  std::vector<Matrix> blocks;
  for (Index l = 0; l < data.num_groups(); ++l) {
    require(data.block(l).cols() == data.group_size(l), "cannot center compressed data");
    const Matrix& Y = data.block(l);
    const Vector mean = Y.rowwise().mean();
    blocks.push_back(Y.colwise() - mean);
  }
  return GroupedData(std::move(blocks));
}

json to_json(const ModelRecord& rec) {
  const FactorModel& m = rec.model;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["d"] = m.dim();
  j["k"] = m.rank();
  j["L"] = m.num_groups();
  j["F"] = matrix_to_json(m.F());
  j["v"] = vector_to_json(m.v());
  j["loglik"] = rec.loglik;
  j["loglik_note"] = "natural log; ln(2*pi) constants dropped";
  j["groups"] = rec.groups;
  j["converged"] = rec.converged;
  j["iterations"] = rec.iterations;
  if (rec.trace) j["trace"] = {{"loglik", rec.trace->loglik}, {"f_change", rec.trace->f_change}};
  j["config_echo"] = rec.config_echo;
  j["seed"] = rec.seed;
  return j;
}

ModelRecord model_record_from_json(const json& j) {
  try {
    if (!j.is_object()) fail(ErrorKind::io, "model file must hold a JSON object");
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      fail(ErrorKind::io, "unsupported schema_version");
    const Index d = j.at("d").get<Index>();
    const Index k = j.at("k").get<Index>();
    const Index L = j.at("L").get<Index>();
    if (d < 1 || k < 1 || k > d || L < 1) fail(ErrorKind::io, "invalid model shape");
    ModelRecord rec;
    rec.model = FactorModel::from_factor(matrix_from_json(j.at("F"), d, k, "F"), vector_from_json(j.at("v"), L, "v"));
    rec.loglik = json_number(j.at("loglik"));
    if (j.contains("groups")) rec.groups = j["groups"].get<std::vector<std::string>>();
    if (j.contains("converged")) rec.converged = j["converged"].get<bool>();
    if (j.contains("iterations")) rec.iterations = j["iterations"].get<int>();
    if (j.contains("trace")) {
      FitTrace t;
      t.loglik = doubles_from_json(j["trace"].at("loglik"));
      t.f_change = doubles_from_json(j["trace"].at("f_change"));
      rec.trace = std::move(t);
    }
    if (j.contains("config_echo")) rec.config_echo = j["config_echo"];
    if (j.contains("seed")) rec.seed = j["seed"].get<std::uint64_t>();
    return rec;
  } catch (const json::exception& e) {
    fail(ErrorKind::io, std::string("malformed model file: ") + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::io, "write failed for '" + path + "'");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::io, "'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_model_json(const std::string& path, const ModelRecord& rec) { write_json_file(path, to_json(rec)); }

ModelRecord read_model_json(const std::string& path) { return model_record_from_json(read_json_file(path)); }

json to_json(const TruthModel& truth, std::uint64_t seed) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "truth";
  j["d"] = truth.dim();
  j["k"] = truth.rank();
  j["L"] = truth.num_groups();
  j["F"] = matrix_to_json(truth.factor());
  j["v"] = vector_to_json(truth.v);
  j["lambda_true"] = vector_to_json(truth.lambda);
  j["U_true"] = matrix_to_json(truth.U);
  j["group_sizes"] = truth.group_sizes;
  json blocks = json::array();
  for (const auto& g : truth.feature_blocks) {
    json gb = json::array();
    for (const auto& b : g) gb.push_back({{"count", b.count}, {"variance", b.variance}});
    blocks.push_back(std::move(gb));
  }
  j["feature_blocks"] = std::move(blocks);
  j["seed"] = seed;
  return j;
}

TruthModel truth_from_json(const json& j) {
  try {
    const Index d = j.at("d").get<Index>();
    const Index k = j.at("k").get<Index>();
    const Index L = j.at("L").get<Index>();
    TruthModel t;
    t.U = matrix_from_json(j.at("U_true"), d, k, "U_true");
    t.lambda = vector_from_json(j.at("lambda_true"), k, "lambda_true");
    t.v = vector_from_json(j.at("v"), L, "v");
    t.group_sizes = j.at("group_sizes").get<std::vector<Index>>();
    if (j.contains("feature_blocks")) {
      for (const auto& g : j["feature_blocks"]) {
        std::vector<FeatureBlock> gb;
        for (const auto& b : g) gb.push_back({b.at("count").get<Index>(), b.at("variance").get<double>()});
        t.feature_blocks.push_back(std::move(gb));
      }
    }
    t.validate();
    return t;
  } catch (const json::exception& e) {
    fail(ErrorKind::io, std::string("malformed truth file: ") + e.what());
  }
}

}  // namespace heppcat
