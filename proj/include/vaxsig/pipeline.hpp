#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "vaxsig/ingest.hpp"
#include "vaxsig/signal.hpp"
#include "vaxsig/sim.hpp"

namespace vaxsig {

inline constexpr const char* kVersion = "vaxsig 0.1.0";

// Exit codes: 2 config, 3 data, 4 pipeline.
struct StageError : std::runtime_error {
  StageError(int code, std::string stage, const std::string& msg)
      : std::runtime_error(msg), code(code), stage(std::move(stage)) {}
  int code;
  std::string stage;
};

struct ConfigError : StageError {
  ConfigError(const std::string& stage, const std::string& msg)
      : StageError(2, stage, msg) {}
};
struct DataError : StageError {
  DataError(const std::string& stage, const std::string& msg)
      : StageError(3, stage, msg) {}
};
struct PipelineError : StageError {
  PipelineError(const std::string& stage, const std::string& msg)
      : StageError(4, stage, msg) {}
};

struct RunConfig {
  std::string reports_path;
  std::string ontology_path;
  std::string out_dir;
  ReadOptions read;
  FilterPolicy filters;
  FitConfig fit;
  PermutationPlan plan;
  double alpha = 0.01;
  double s_min = 3.0;
  bool dump_table = false;
  bool dump_null = false;
  bool dry_run = false;
};

// Full pipeline: ingest -> filter -> table -> fit -> shrink -> permute ->
// report. Writes group_signals.csv, ae_signals.csv, heatmap.csv,
// manifest.json and the optional dumps into out_dir. Returns the exit code
// and prints one machine-parsable line per error to `err`.
int run_mine(const RunConfig& config, std::ostream& err);

// Ingest + filters + table only; prints I, J, group count, total weight.
int run_validate(const RunConfig& config, std::ostream& out, std::ostream& err);

struct SimulateConfig {
  SimScenario scenario;
  std::string out_dir;
  bool dry_run = false;
};

// Runs the study and writes sim_group.csv, sim_ae.csv, manifest.json.
int run_simulate(const SimulateConfig& config, std::ostream& err);

}  // namespace vaxsig
