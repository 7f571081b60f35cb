#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bgtse/manifest.hpp"
#include "bgtse/metrics.hpp"

namespace bgtse {

// A named pipeline configuration to score over a corpus.
struct SystemSpec {
  std::string name;
  PipelineConfig config;
};

// Canonical name: "<frontend>+<extractor>" plus "+mvdr" when the back-end is
// enabled, e.g. "dsb+oracle-irm+mvdr".
std::string system_name(const PipelineConfig& cfg);

struct EvalRow {
  std::string scene_id;
  std::string system;
  MetricResult metrics;
  bool failed = false;
  std::string error;  // reason when failed
};

struct EvalAggregate {
  std::string system;
  Eigen::Index count = 0;  // scored rows
  Eigen::Index failed_count = 0;
  double mean_sdr_db = 0.0;
  double median_sdr_db = 0.0;
  double mean_si_sdr_db = 0.0;
  double median_si_sdr_db = 0.0;
  double mean_si_sdri_db = 0.0;
  double median_si_sdri_db = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<std::string> condition_tags;

  // Recomputed from rows on every call (capped values, failed rows excluded),
  // one aggregate per system in first-appearance order.
  std::vector<EvalAggregate> aggregates() const;
};

struct EvalOptions {
  // Called with every successful estimate (scene id, system name, waveform);
  // lets the CLI write estimate WAVs without a second pipeline pass.
  std::function<void(const std::string&, const std::string&, const Waveform&)> estimate_sink;
};

// Scores every system on every manifest scene. Scenes that fail to load or
// process are recorded as failed rows; evaluation continues. Row order is
// manifest order x system order (deterministic).
EvalReport evaluate_corpus(const Manifest& m, const std::vector<SystemSpec>& systems,
                           const EvalOptions& opts = {});

struct DoaSweepCell {
  double error_deg = 0.0;
  std::string bin;  // "ge<threshold>" or "lt<threshold>"
  Eigen::Index scene_count = 0;
  double mean_si_sdri_db = 0.0;
};

struct DoaSweepTable {
  double as_threshold_deg = 15.0;
  std::vector<DoaSweepCell> cells;  // grid order, ge bin before lt bin

  const DoaSweepCell& cell(double error_deg, const std::string& bin) const;
};

// Runs cfg with the target DOA perturbed by +e and -e in azimuth (averaged;
// e = 0 runs once and matches evaluate_corpus exactly), reporting mean SI-SDRi
// per error with scenes split at the angular-spacing threshold. Errors
// propagate; this assumes a healthy corpus.
DoaSweepTable doa_error_sweep(const Manifest& m, const PipelineConfig& cfg,
                              const std::vector<double>& error_grid_deg,
                              double as_threshold_deg = 15.0);

// Fixed 6-decimal formatting ("-3.141593", "nan"); all report files use it so
// repeated runs are byte-identical.
std::string format_db(double v);

// CSV schema: scene_id,system,sdr_db,si_sdr_db,si_sdri_db,flags
void write_report_csv(const std::string& path, const EvalReport& report);
EvalReport read_report_csv(const std::string& path);

// JSON summary of the aggregates ("bgtse-report-v1").
void write_report_json(const std::string& path, const EvalReport& report);

// CSV schema: error_deg,bin,scene_count,mean_si_sdri_db
void write_sweep_csv(const std::string& path, const DoaSweepTable& table);
// Plot-friendly whitespace-separated columns, one block per bin.
void write_sweep_dat(const std::string& path, const DoaSweepTable& table);

}  // namespace bgtse
