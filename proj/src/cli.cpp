#include "bgtse/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "bgtse/rng.hpp"
#include "bgtse/wav_io.hpp"

namespace bgtse {

namespace fs = std::filesystem;

namespace {

void refuse_existing(const fs::path& p, bool overwrite) {
  if (fs::exists(p) && !overwrite)
    throw ConfigError(p.string() + " already exists; pass --overwrite to replace it");
}

void warn_sample_rate(double rate) {
  if (rate != 8000.0)
    std::cerr << "warning: sample rate " << rate
              << " Hz differs from the 8 kHz default; parity at other rates is untested\n";
}

std::string scene_id_for(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%06d", index);
  return buf;
}

}  // namespace

SimulateResult cmd_simulate(const SimulateOptions& opts) {
  ToolConfig cfg = opts.config;
  cfg.ranges.sample_rate = cfg.sample_rate;
  cfg.validate();
  if (opts.num_scenes < 0) throw ConfigError("simulate: scene count must be >= 0");
  if (!(opts.duration_s > 0.0)) throw ConfigError("simulate: duration must be > 0");
  warn_sample_rate(cfg.sample_rate);

  const fs::path out = opts.out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(opts.out_dir);
  const fs::path manifest_path = out / "manifest.json";
  refuse_existing(manifest_path, opts.overwrite);
  fs::create_directories(out);

  const auto num_samples =
      static_cast<Eigen::Index>(std::lround(opts.duration_s * cfg.sample_rate));

  SimulateResult result;
  result.manifest.root = ".";
  result.manifest.sample_rate = cfg.sample_rate;
  for (int i = 0; i < opts.num_scenes; ++i) {
    const std::string id = scene_id_for(i);
    try {
      const SceneSpec spec = sample_scene(mix_seed(cfg.seed, static_cast<uint64_t>(i)),
                                          cfg.ranges);
      const auto dry = scene_dry_signals(spec, num_samples);
      const SceneSignals signals = simulate_scene(spec, dry[0], dry[1]);

      const fs::path scene_dir = out / id;
      fs::create_directories(scene_dir);
      save_scene((scene_dir / "scene.json").string(), spec);
      write_wav((scene_dir / "mixture.wav").string(), signals.mixture, WavFormat::kFloat32);
      write_wav((scene_dir / "target.wav").string(), signals.target_image, WavFormat::kFloat32);
      write_wav((scene_dir / "interferer.wav").string(), signals.interferer_image,
                WavFormat::kFloat32);

      ManifestRow row;
      row.id = id;
      row.spec_path = id + "/scene.json";
      row.mixture_path = id + "/mixture.wav";
      row.target_path = id + "/target.wav";
      row.interferer_path = id + "/interferer.wav";
      row.geometry = spec.geometry();
      row.target_doa = spec.source_doas[0];
      row.interferer_doa = spec.source_doas[1];
      result.manifest.rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      std::cerr << "simulate: scene " << id << " failed: " << e.what() << '\n';
      ++result.failed_scenes;
    }
  }

  save_manifest(manifest_path.string(), result.manifest);  // commit point
  result.manifest_path = manifest_path.string();
  return result;
}

namespace {

RunResult run_systems(const Manifest& m, const std::vector<SystemSpec>& systems,
                      const fs::path& out, bool overwrite, bool write_estimates) {
  const fs::path report_csv = out / "report.csv";
  refuse_existing(report_csv, overwrite);
  fs::create_directories(out);

  EvalOptions eval_opts;
  if (write_estimates) {
    const fs::path est_dir = out / "estimates";
    fs::create_directories(est_dir);
    eval_opts.estimate_sink = [est_dir](const std::string& id, const std::string& sys,
                                        const Waveform& est) {
      write_wav((est_dir / (id + "_" + sys + ".wav")).string(), est, WavFormat::kFloat32);
    };
  }

  RunResult result;
  result.report = evaluate_corpus(m, systems, eval_opts);
  for (const auto& row : result.report.rows)
    if (row.failed) ++result.failed_rows;

  write_report_csv(report_csv.string(), result.report);
  write_report_json((out / "report.json").string(), result.report);
  return result;
}

}  // namespace

RunResult cmd_run(const RunOptions& opts) {
  opts.pipeline.validate();
  const Manifest m = load_manifest(opts.manifest_path);
  warn_sample_rate(m.sample_rate);

  std::vector<SystemSpec> systems;
  PipelineConfig frontend_only = opts.pipeline;
  frontend_only.backend_enabled = false;
  const std::string base_name =
      opts.system.empty() ? system_name(frontend_only) : opts.system;
  systems.push_back({base_name, frontend_only});
  if (opts.pipeline.backend_enabled) {
    const std::string backend_name =
        opts.system.empty() ? system_name(opts.pipeline) : opts.system + "+mvdr";
    systems.push_back({backend_name, opts.pipeline});
  }

  return run_systems(m, systems, fs::path(opts.out_dir), opts.overwrite, opts.write_estimates);
}

RunResult cmd_eval(const EvalCmdOptions& opts) {
  opts.base.validate();
  if (opts.frontends.empty()) throw ConfigError("eval: no front-ends requested");
  const Manifest m = load_manifest(opts.manifest_path);
  warn_sample_rate(m.sample_rate);

  std::vector<SystemSpec> systems;
  for (const std::string& name : opts.frontends) {
    PipelineConfig cfg = opts.base;
    cfg.frontend_kind = frontend_kind_from_name(name);
    systems.push_back({system_name(cfg), cfg});
  }
  return run_systems(m, systems, fs::path(opts.out_dir), opts.overwrite, false);
}

DoaSweepTable cmd_sweep_doa(const SweepOptions& opts) {
  opts.pipeline.validate();
  if (opts.error_grid_deg.empty())
    throw ConfigError("sweep-doa: error grid must not be empty");
  const Manifest m = load_manifest(opts.manifest_path);
  warn_sample_rate(m.sample_rate);

  const fs::path out(opts.out_dir);
  const fs::path sweep_csv = out / "sweep.csv";
  refuse_existing(sweep_csv, opts.overwrite);
  fs::create_directories(out);

  const DoaSweepTable table =
      doa_error_sweep(m, opts.pipeline, opts.error_grid_deg, opts.as_threshold_deg);
  write_sweep_csv(sweep_csv.string(), table);
  write_sweep_dat((out / "sweep.dat").string(), table);
  return table;
}

EvalReport cmd_report(const ReportCmdOptions& opts, std::ostream& out) {
  const EvalReport report = read_report_csv(opts.csv_path);
  out << "system,count,failed,mean_sdr_db,mean_si_sdr_db,mean_si_sdri_db,median_si_sdri_db\n";
  for (const auto& agg : report.aggregates()) {
    out << agg.system << ',' << agg.count << ',' << agg.failed_count << ','
        << format_db(agg.mean_sdr_db) << ',' << format_db(agg.mean_si_sdr_db) << ','
        << format_db(agg.mean_si_sdri_db) << ',' << format_db(agg.median_si_sdri_db) << '\n';
  }
  if (!opts.json_out.empty()) write_report_json(opts.json_out, report);
  return report;
}

namespace {

// Pipeline/tool-config flags shared by run/eval/sweep-doa.
struct PipelineFlags {
  std::string config_path;
  std::string frontend;
  std::string extractor;
  bool backend = false;
  bool no_backend = false;
  Eigen::Index ref_channel = -1;
  double irm_exponent = -1.0;
  double coherence_smoothing = -1.0;
  std::string command;
  double loading = -1.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "bgtse-config-v1 JSON with defaults");
    cmd->add_option("--frontend", frontend, "Front-end beamformer: dsb, sdb, or mpdr");
    cmd->add_option("--extractor", extractor,
                    "Extractor: oracle-irm, oracle-signal, coherence-mask, external-command");
    cmd->add_flag("--backend", backend, "Enable the MVDR back-end");
    cmd->add_flag("--no-backend", no_backend, "Disable the MVDR back-end");
    cmd->add_option("--ref-channel", ref_channel, "Reference channel index (default 0)");
    cmd->add_option("--irm-exponent", irm_exponent, "Oracle IRM magnitude exponent");
    cmd->add_option("--coherence-smoothing", coherence_smoothing,
                    "Coherence mask smoothing factor in (0, 1)");
    cmd->add_option("--command", command, "External extractor command");
    cmd->add_option("--loading", loading, "Diagonal loading for SDB/MPDR/MVDR");
  }

  ToolConfig apply() const {
    ToolConfig cfg;
    if (!config_path.empty()) cfg = load_tool_config(config_path);
    if (!frontend.empty()) cfg.pipeline.frontend_kind = frontend_kind_from_name(frontend);
    if (!extractor.empty()) cfg.pipeline.extractor.kind = extractor_kind_from_name(extractor);
    if (backend && no_backend) throw ConfigError("--backend conflicts with --no-backend");
    if (backend) cfg.pipeline.backend_enabled = true;
    if (no_backend) cfg.pipeline.backend_enabled = false;
    if (ref_channel >= 0) cfg.pipeline.ref_channel = ref_channel;
    if (irm_exponent > 0.0) cfg.pipeline.extractor.irm_exponent = irm_exponent;
    if (coherence_smoothing > 0.0)
      cfg.pipeline.extractor.coherence_smoothing = coherence_smoothing;
    if (!command.empty()) cfg.pipeline.extractor.command = command;
    if (loading >= 0.0) cfg.pipeline.loading = loading;
    return cfg;
  }
};

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"bgtse: beamformer-guided target speaker extraction toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Sample and render a 2-speaker corpus");
  PipelineFlags sim_flags;
  int sim_scenes = 10;
  uint64_t sim_seed = 0;
  bool sim_seed_set = false;
  double sim_duration = 3.0;
  double sim_rate = 0.0;
  std::string sim_out;
  bool sim_overwrite = false;
  sim->add_option("--config", sim_flags.config_path, "bgtse-config-v1 JSON with defaults");
  sim->add_option("--scenes", sim_scenes, "Number of scenes")->check(CLI::NonNegativeNumber);
  sim->add_option("--seed", sim_seed, "Corpus seed")->each([&](const std::string&) {
    sim_seed_set = true;
  });
  sim->add_option("--duration", sim_duration, "Dry-signal duration, seconds");
  sim->add_option("--sample-rate", sim_rate, "Sample rate, Hz (default 8000)");
  sim->add_option("--out", sim_out, "Output corpus directory")->required();
  sim->add_flag("--overwrite", sim_overwrite, "Replace an existing corpus");

  // run
  auto* run = app.add_subcommand("run", "Run one pipeline over a corpus and score it");
  PipelineFlags run_flags;
  std::string run_manifest, run_out, run_system;
  bool run_overwrite = false, run_no_estimates = false;
  run->add_option("--manifest", run_manifest, "Corpus manifest JSON")->required();
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--system", run_system, "Report label override");
  run->add_flag("--overwrite", run_overwrite, "Replace existing outputs");
  run->add_flag("--no-estimates", run_no_estimates, "Skip writing estimate WAVs");
  run_flags.add_to(run);

  // eval
  auto* ev = app.add_subcommand("eval", "Compare front-ends over a corpus");
  PipelineFlags eval_flags;
  std::string eval_manifest, eval_out;
  std::vector<std::string> eval_frontends = {"dsb", "sdb", "mpdr"};
  bool eval_overwrite = false;
  ev->add_option("--manifest", eval_manifest, "Corpus manifest JSON")->required();
  ev->add_option("--out", eval_out, "Output directory")->required();
  ev->add_option("--frontends", eval_frontends, "Front-ends to compare")->delimiter(',');
  ev->add_flag("--overwrite", eval_overwrite, "Replace existing outputs");
  eval_flags.add_to(ev);

  // sweep-doa
  auto* sweep = app.add_subcommand("sweep-doa", "DOA-error robustness sweep");
  PipelineFlags sweep_flags;
  std::string sweep_manifest, sweep_out;
  std::vector<double> sweep_grid;
  double sweep_threshold = 15.0;
  bool sweep_overwrite = false;
  sweep->add_option("--manifest", sweep_manifest, "Corpus manifest JSON")->required();
  sweep->add_option("--out", sweep_out, "Output directory")->required();
  sweep->add_option("--grid", sweep_grid, "DOA error grid, degrees")
      ->delimiter(',')
      ->required();
  sweep->add_option("--threshold", sweep_threshold, "Angular-spacing split, degrees");
  sweep->add_flag("--overwrite", sweep_overwrite, "Replace existing outputs");
  sweep_flags.add_to(sweep);

  // report
  auto* rep = app.add_subcommand("report", "Re-aggregate an existing report CSV");
  std::string rep_csv, rep_json;
  rep->add_option("--csv", rep_csv, "report.csv produced by run/eval")->required();
  rep->add_option("--json", rep_json, "Also write a JSON summary here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems are configuration errors
  }

  try {
    if (sim->parsed()) {
      SimulateOptions opts;
      opts.config = sim_flags.apply();
      if (sim_seed_set) opts.config.seed = sim_seed;
      if (sim_rate > 0.0) {
        opts.config.sample_rate = sim_rate;
        opts.config.ranges.sample_rate = sim_rate;
      }
      opts.num_scenes = sim_scenes;
      opts.duration_s = sim_duration;
      opts.out_dir = sim_out;
      opts.overwrite = sim_overwrite;
      const SimulateResult result = cmd_simulate(opts);
      std::cout << "wrote " << result.manifest.rows.size() << " scenes to "
                << result.manifest_path << '\n';
      return result.failed_scenes > 0 ? 1 : 0;
    }
    if (run->parsed()) {
      RunOptions opts;
      opts.pipeline = run_flags.apply().pipeline;
      opts.manifest_path = run_manifest;
      opts.out_dir = run_out;
      opts.system = run_system;
      opts.overwrite = run_overwrite;
      opts.write_estimates = !run_no_estimates;
      const RunResult result = cmd_run(opts);
      std::cout << "scored " << result.report.rows.size() << " rows ("
                << result.failed_rows << " failed)\n";
      return result.failed_rows > 0 ? 1 : 0;
    }
    if (ev->parsed()) {
      EvalCmdOptions opts;
      opts.base = eval_flags.apply().pipeline;
      opts.manifest_path = eval_manifest;
      opts.out_dir = eval_out;
      opts.frontends = eval_frontends;
      opts.overwrite = eval_overwrite;
      const RunResult result = cmd_eval(opts);
      std::cout << "scored " << result.report.rows.size() << " rows ("
                << result.failed_rows << " failed)\n";
      return result.failed_rows > 0 ? 1 : 0;
    }
    if (sweep->parsed()) {
      SweepOptions opts;
      opts.pipeline = sweep_flags.apply().pipeline;
      opts.manifest_path = sweep_manifest;
      opts.out_dir = sweep_out;
      opts.error_grid_deg = sweep_grid;
      opts.as_threshold_deg = sweep_threshold;
      opts.overwrite = sweep_overwrite;
      cmd_sweep_doa(opts);
      std::cout << "wrote sweep tables to " << sweep_out << '\n';
      return 0;
    }
    if (rep->parsed()) {
      cmd_report({rep_csv, rep_json}, std::cout);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace bgtse
