#pragma once

// File formats: grouped CSV datasets and JSON model / truth records.
//
// Dataset CSV: a header row whose first field is `group`, then one row per
// sample: a group label followed by d numeric features. Groups are numbered in
// order of first appearance. Numbers are written in shortest round-trip form.

#include "heppcat/fitter.hpp"
#include "heppcat/model.hpp"
#include "heppcat/simgen.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace heppcat {

struct LabeledData {
  GroupedData data;
  std::vector<std::string> labels;         // one per group
  std::vector<std::string> feature_names;  // d entries
};

LabeledData read_dataset_csv(std::istream& in);
LabeledData read_dataset_csv(const std::string& path);
void write_dataset_csv(std::ostream& out, const LabeledData& data);
void write_dataset_csv(const std::string& path, const LabeledData& data);

/// Default labels g1..gL and features x1..xd.
LabeledData label_default(GroupedData data);

/// Subtracts each group's sample mean from its samples.
GroupedData center_groups(const GroupedData& data);

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);

inline constexpr int kSchemaVersion = 1;

struct ModelRecord {
  FactorModel model;
  double loglik = 0.0;
  std::vector<std::string> groups{};
  bool converged = false;
  int iterations = 0;
  std::optional<FitTrace> trace{};  // loglik and f_change only
  nlohmann::json config_echo = nlohmann::json::object();
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const ModelRecord& rec);
ModelRecord model_record_from_json(const nlohmann::json& j);
void write_model_json(const std::string& path, const ModelRecord& rec);
ModelRecord read_model_json(const std::string& path);

nlohmann::json to_json(const TruthModel& truth, std::uint64_t seed);
TruthModel truth_from_json(const nlohmann::json& j);

/// Writes `j` (pretty-printed, trailing newline) to `path`.
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace heppcat
