// Batch jobs: JSON configuration, dispatch to the numerical modules, and
// the JSON/CSV artifacts they produce.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tf {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  exit_ok = 0,
  exit_schema = 1,
  exit_cert_fail = 2,
  exit_uncertified = 3,
  exit_computation = 4,
};

const std::vector<std::string>& job_commands();

// A validated configuration with every default materialized. `resolved`
// is what gets echoed into summaries; parsing it again yields the same
// object.
struct JobConfig {
  nlohmann::json resolved;

  const std::string& command() const;
  template <class T>
  T get(const std::string& key) const {
    return resolved.at(key).get<T>();
  }
  const nlohmann::json& at(const std::string& key) const { return resolved.at(key); }
};

// Throws ConfigError with the path of the first offending field.
// `command` overrides (or must match) the config's own command field.
JobConfig parse_job(const nlohmann::json& j, const std::optional<std::string>& command = {});
nlohmann::json to_json(const JobConfig& c);

struct JobResult {
  int exit_code = exit_ok;
  nlohmann::json summary;
  // file name -> CSV contents (one header line, fixed column order)
  std::map<std::string, std::string> csv;
};

// Never throws for computation failures; they become exit code 4 with an
// error payload in the summary.
JobResult run_job(const JobConfig& job);

// Writes summary.json and the CSV files into `dir` (created if missing).
void write_artifacts(const JobResult& r, const std::string& dir);

// Shortest round-trip decimal form of a double, as used in the CSVs.
std::string format_number(double x);

}  // namespace tf
