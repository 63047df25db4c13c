#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "subdyn/model.hpp"
#include "subdyn/subdynamics.hpp"

namespace subdyn {

inline constexpr const char* kReportSchema = "subdyn-report/1";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario { Classify, Evolve, SwapCalibrate, CnotDemo, TuringDemo, Verify };

std::string to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& text);
const std::vector<std::string>& scenario_names();

struct TimeGrid {
  double start = 0.0;
  double end = 10.0;
  std::size_t steps = 101;
};

struct SwapOptions {
  double t_sw = 1.0;
  double homogeneity_tol = 1e-6;
  int branches = 0;  // extra 2 pi branches to enumerate for the dominant frequency
};

struct CnotOptions {
  cplx skew{0.3, 0.2};
  std::size_t ambient_dim = 4;
};

struct TuringOptions {
  std::size_t n_tape = 2;
  cplx skew{0.0, 0.0};
  std::size_t head_index = 0;
  double omega = 1.0;
  std::vector<double> angles;  // tape-controlled step, one per tape configuration
};

struct VerifyOptions {
  std::size_t samples = 20;
};

struct ScenarioConfig {
  Scenario scenario = Scenario::Classify;
  std::optional<ModelSpec> model;
  Order order = Order::Exact;
  TimeGrid t_grid;
  double eta = 0.0;
  std::uint64_t seed = 0;
  std::string output_dir;
  bool strict = false;
  bool allow_large = false;
  SwapOptions swap;
  CnotOptions cnot;
  TuringOptions turing;
  VerifyOptions verify;

  std::size_t dimension_cap() const;
  PerturbationOptions perturbation() const;
};

// Parses and validates a JSON document; unknown keys are rejected.
ScenarioConfig load_config(const std::string& text);
ScenarioConfig load_config_file(const std::filesystem::path& path);
void validate(const ScenarioConfig& config);

nlohmann::ordered_json to_json(const ScenarioConfig& config);
nlohmann::ordered_json to_json(const ModelSpec& spec);

// Closest candidate by edit distance, empty if nothing is reasonably close.
std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates);
std::size_t edit_distance(const std::string& a, const std::string& b);

struct CsvTable {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string render() const;
};

std::string format_number(double value);

struct RunReport {
  nlohmann::ordered_json document;
  std::vector<CsvTable> tables;
  bool passed = true;  // verify scenario: all checks passed
  double wall_seconds = 0.0;

  std::string payload() const;  // report.json contents
};

RunReport run(const ScenarioConfig& config);

// report.json, one CSV per table and run_metadata.json
void write_outputs(const RunReport& report, const std::filesystem::path& dir);

// --out, then the config's output_dir (relative to SUBDYN_OUTPUT_ROOT when set), then ./subdyn-out/<scenario>
std::filesystem::path resolve_output_dir(const ScenarioConfig& config, const std::string& cli_out);

}  // namespace subdyn
