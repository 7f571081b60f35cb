#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bgtse/eval.hpp"

namespace bgtse {

// Command implementations used by the bgtse executable; exposed so tests can
// drive them in-process. File-refusal (existing outputs without overwrite) and
// invalid options raise ConfigError, which the CLI maps to exit code 2.

struct SimulateOptions {
  ToolConfig config;
  int num_scenes = 10;
  std::string out_dir;  // overrides config.out_dir when nonempty
  double duration_s = 3.0;
  bool overwrite = false;
};

struct SimulateResult {
  Manifest manifest;
  std::string manifest_path;
  Eigen::Index failed_scenes = 0;
};

// Samples, simulates, and writes n scenes + WAVs; the manifest is written
// last as the commit point. Per-scene failures are reported on stderr and
// skipped. Deterministic per (config, n).
SimulateResult cmd_simulate(const SimulateOptions& opts);

struct RunOptions {
  std::string manifest_path;
  PipelineConfig pipeline;
  std::string system;  // report label; defaults to system_name(pipeline)
  std::string out_dir;
  bool overwrite = false;
  bool write_estimates = true;
};

struct RunResult {
  EvalReport report;
  Eigen::Index failed_rows = 0;
};

// Runs the pipeline over the corpus, writing estimates plus report.csv and
// report.json. With the back-end enabled the front-end-only composition is
// scored too, so the report carries both estimates per scene.
RunResult cmd_run(const RunOptions& opts);

struct EvalCmdOptions {
  std::string manifest_path;
  PipelineConfig base;  // extractor/back-end settings shared by the battery
  std::vector<std::string> frontends = {"dsb", "sdb", "mpdr"};
  std::string out_dir;
  bool overwrite = false;
};

// Multi-front-end comparison report (no estimate WAVs).
RunResult cmd_eval(const EvalCmdOptions& opts);

struct SweepOptions {
  std::string manifest_path;
  PipelineConfig pipeline;
  std::vector<double> error_grid_deg;
  double as_threshold_deg = 15.0;
  std::string out_dir;
  bool overwrite = false;
};

// DOA-error robustness sweep; writes sweep.csv and sweep.dat.
DoaSweepTable cmd_sweep_doa(const SweepOptions& opts);

struct ReportCmdOptions {
  std::string csv_path;
  std::string json_out;  // optional JSON summary destination
};

// Re-aggregates an existing report CSV and prints the summary table.
EvalReport cmd_report(const ReportCmdOptions& opts, std::ostream& out);

// Full argv interface. Exit codes: 0 success, 1 partial scene failures or
// runtime errors, 2 configuration/usage errors.
int run_cli(int argc, char** argv);

}  // namespace bgtse
