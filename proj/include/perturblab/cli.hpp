#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "perturblab/common.hpp"

namespace perturblab::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kNumericalFailure = 2, kAcceptanceFailure = 3 };

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json params = nlohmann::json::object();  // fully resolved
  std::string output_dir = "out";
  std::vector<std::string> formats{"csv", "json", "svg"};
  std::uint64_t rng_seed = 1;

  bool wants(const std::string& format) const;
};

// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::string> experiment;
  std::optional<std::string> output_dir;
  std::optional<std::vector<std::string>> formats;
  std::optional<std::uint64_t> rng_seed;
};

const std::vector<std::string>& experiment_names();
std::string nearest_experiment(const std::string& name);

// Built-in preset used when no config file is given.
ExperimentConfig default_config(const std::string& experiment);

// Throws ConfigError with "source:line: key: message" diagnostics.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>",
                              const Overrides& over = {});
ExperimentConfig resolve_config(const std::optional<std::string>& path, const Overrides& over);
std::vector<std::string> parse_formats(const std::string& list);

nlohmann::json to_json(const ExperimentConfig& c);

struct ValidationReport {
  bool ok = false;
  std::vector<std::string> errors;
  std::optional<ExperimentConfig> config;
};

// Schema validation only; nothing is computed.
ValidationReport validate(const std::string& config_path);
ValidationReport validate_text(const std::string& text, const std::string& source = "<config>");

// ---- artifacts ----

struct Artifact {
  std::string file;    // relative to the output directory
  std::string format;  // csv, json or svg
  std::string content;
};

struct ExperimentOutput {
  nlohmann::json summary = nlohmann::json::object();
  std::vector<Artifact> artifacts;
  bool acceptance_failed = false;
};

// Computes without touching the file system; module errors propagate.
ExperimentOutput run_experiment(const ExperimentConfig& config);

struct RunResult {
  int exit_code = kOk;
  std::string message;
  std::vector<std::string> files;
  nlohmann::json summary;
};

// Computes, writes artifacts and the manifest, maps errors to exit codes.
RunResult run(const ExperimentConfig& config);

// Write to a temporary sibling, then rename.
void write_atomic(const std::string& path, const std::string& content);

// ---- acceptance ----

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  nlohmann::json measured = nlohmann::json::object();
  double seconds = 0;
};

int acceptance_count();
// Empty selection runs every criterion.
std::vector<CriterionResult> run_acceptance(const std::vector<int>& only = {});
std::string format_line(const CriterionResult& r);

}  // namespace perturblab::cli
