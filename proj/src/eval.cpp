#include "bgtse/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "bgtse/wav_io.hpp"

namespace bgtse {

std::string system_name(const PipelineConfig& cfg) {
  std::string name =
      frontend_kind_name(cfg.frontend_kind) + "+" + extractor_kind_name(cfg.extractor.kind);
  if (cfg.backend_enabled) name += "+mvdr";
  return name;
}

namespace {

struct LoadedScene {
  SceneSignals signals;
};

LoadedScene load_scene_signals(const Manifest& m, const ManifestRow& row) {
  LoadedScene scene;
  scene.signals.mixture = read_wav(m.resolve(row.mixture_path));
  scene.signals.target_image = read_wav(m.resolve(row.target_path));
  scene.signals.interferer_image = read_wav(m.resolve(row.interferer_path));

  const auto& y = scene.signals.mixture;
  if (y.channel_count() != row.geometry.mic_count())
    throw ConfigError("scene \"" + row.id + "\": mixture channels do not match geometry");
  for (const MultiChannelWaveform* img :
       {&scene.signals.target_image, &scene.signals.interferer_image}) {
    if (img->channel_count() != y.channel_count() || img->length() != y.length())
      throw ConfigError("scene \"" + row.id + "\": image shape does not match mixture");
  }
  return scene;
}

Waveform run_system(const SceneSignals& signals, const ManifestRow& row,
                    const PipelineConfig& cfg, const Doa& target_doa) {
  return cfg.backend_enabled
             ? run_bg_tse_with_backend(signals.mixture, row.geometry, target_doa, cfg,
                                       &signals)
             : run_bg_tse(signals.mixture, row.geometry, target_doa, cfg, &signals);
}

}  // namespace

EvalReport evaluate_corpus(const Manifest& m, const std::vector<SystemSpec>& systems,
                           const EvalOptions& opts) {
  m.validate(false);
  EvalReport report;
  for (const ManifestRow& row : m.rows) {
    LoadedScene scene;
    std::string load_error;
    bool loaded = false;
    try {
      scene = load_scene_signals(m, row);
      loaded = true;
    } catch (const std::exception& e) {
      load_error = e.what();
    }

    for (const SystemSpec& sys : systems) {
      EvalRow out;
      out.scene_id = row.id;
      out.system = sys.name;
      if (!loaded) {
        out.failed = true;
        out.error = load_error;
        report.rows.push_back(std::move(out));
        continue;
      }
      try {
        const Waveform est = run_system(scene.signals, row, sys.config, row.target_doa);
        const Eigen::Index ref = sys.config.ref_channel;
        out.metrics = measure(scene.signals.target_image.channel(ref), est,
                              scene.signals.mixture.channel(ref));
        if (opts.estimate_sink) opts.estimate_sink(row.id, sys.name, est);
      } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
      }
      report.rows.push_back(std::move(out));
    }
  }
  return report;
}

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<EvalAggregate> EvalReport::aggregates() const {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const EvalRow*>> by_system;
  for (const auto& row : rows) {
    if (by_system.find(row.system) == by_system.end()) order.push_back(row.system);
    by_system[row.system].push_back(&row);
  }

  std::vector<EvalAggregate> out;
  for (const std::string& name : order) {
    EvalAggregate agg;
    agg.system = name;
    std::vector<double> sdr_v, si_sdr_v, si_sdri_v;
    for (const EvalRow* row : by_system[name]) {
      if (row->failed) {
        ++agg.failed_count;
        continue;
      }
      ++agg.count;
      sdr_v.push_back(row->metrics.sdr_db);
      si_sdr_v.push_back(row->metrics.si_sdr_db);
      si_sdri_v.push_back(row->metrics.si_sdr_improvement_db);
    }
    if (agg.count > 0) {
      const double n = static_cast<double>(agg.count);
      for (const double v : sdr_v) agg.mean_sdr_db += v / n;
      for (const double v : si_sdr_v) agg.mean_si_sdr_db += v / n;
      for (const double v : si_sdri_v) agg.mean_si_sdri_db += v / n;
      agg.median_sdr_db = median_of(sdr_v);
      agg.median_si_sdr_db = median_of(si_sdr_v);
      agg.median_si_sdri_db = median_of(si_sdri_v);
    }
    out.push_back(agg);
  }
  return out;
}

namespace {

std::string bin_label(const char* prefix, double threshold) {
  std::ostringstream os;
  os << prefix << threshold;  // "ge15", "lt15"; shortest round-trip for non-integers
  return os.str();
}

}  // namespace

const DoaSweepCell& DoaSweepTable::cell(double error_deg, const std::string& bin) const {
  for (const auto& c : cells)
    if (c.error_deg == error_deg && c.bin == bin) return c;
  throw ConfigError("sweep table: no cell for error " + std::to_string(error_deg) + ", bin " +
                    bin);
}

DoaSweepTable doa_error_sweep(const Manifest& m, const PipelineConfig& cfg,
                              const std::vector<double>& error_grid_deg,
                              double as_threshold_deg) {
  if (error_grid_deg.empty()) throw ConfigError("doa_error_sweep: empty error grid");
  for (const double e : error_grid_deg)
    if (!std::isfinite(e)) throw ConfigError("doa_error_sweep: non-finite grid entry");
  m.validate(false);

  const std::string ge = bin_label("ge", as_threshold_deg);
  const std::string lt = bin_label("lt", as_threshold_deg);

  // sums[error index][0 = ge, 1 = lt]
  std::vector<std::array<double, 2>> sums(error_grid_deg.size(), {0.0, 0.0});
  std::vector<std::array<Eigen::Index, 2>> counts(error_grid_deg.size(), {0, 0});

  for (const ManifestRow& row : m.rows) {
    const LoadedScene scene = load_scene_signals(m, row);
    const Eigen::Index ref = cfg.ref_channel;
    const Waveform target_ref = scene.signals.target_image.channel(ref);
    const Waveform mixture_ref = scene.signals.mixture.channel(ref);
    const double spacing = angular_spacing_deg(row.target_doa, row.interferer_doa);
    const size_t bin = spacing >= as_threshold_deg ? 0 : 1;

    const auto score_at = [&](double az_offset) {
      const Doa doa = Doa::wrapped(row.target_doa.azimuth_deg + az_offset,
                                   row.target_doa.elevation_deg);
      const Waveform est = run_system(scene.signals, row, cfg, doa);
      return measure(target_ref, est, mixture_ref).si_sdr_improvement_db;
    };

    for (size_t ei = 0; ei < error_grid_deg.size(); ++ei) {
      const double e = error_grid_deg[ei];
      const double score = e == 0.0 ? score_at(0.0) : 0.5 * (score_at(e) + score_at(-e));
      sums[ei][bin] += score;
      ++counts[ei][bin];
    }
  }

  DoaSweepTable table;
  table.as_threshold_deg = as_threshold_deg;
  for (size_t ei = 0; ei < error_grid_deg.size(); ++ei) {
    for (size_t bin = 0; bin < 2; ++bin) {
      DoaSweepCell cell;
      cell.error_deg = error_grid_deg[ei];
      cell.bin = bin == 0 ? ge : lt;
      cell.scene_count = counts[ei][bin];
      cell.mean_si_sdri_db = counts[ei][bin] > 0
                                 ? sums[ei][bin] / static_cast<double>(counts[ei][bin])
                                 : std::numeric_limits<double>::quiet_NaN();
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

std::string format_db(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

namespace {

std::string sanitize_flag_text(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

}  // namespace

void write_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "scene_id,system,sdr_db,si_sdr_db,si_sdri_db,flags\n";
  for (const auto& row : report.rows) {
    if (row.failed) {
      out << row.scene_id << ',' << row.system << ",nan,nan,nan,"
          << sanitize_flag_text("failed:" + row.error) << '\n';
    } else {
      out << row.scene_id << ',' << row.system << ',' << format_db(row.metrics.sdr_db) << ','
          << format_db(row.metrics.si_sdr_db) << ','
          << format_db(row.metrics.si_sdr_improvement_db) << ',' << row.metrics.flags() << '\n';
    }
  }
  if (!out) throw IoError(path + ": write failed");
}

EvalReport read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::string line;
  if (!std::getline(in, line) || line != "scene_id,system,sdr_db,si_sdr_db,si_sdri_db,flags")
    throw ConfigError(path + ": not a report CSV (bad header)");

  EvalReport report;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() == 5 && line.back() == ',') cols.emplace_back();  // empty flags
    if (cols.size() != 6)
      throw ConfigError(path + ": line " + std::to_string(line_no) + ": expected 6 columns");

    EvalRow row;
    row.scene_id = cols[0];
    row.system = cols[1];
    if (cols[5].rfind("failed", 0) == 0) {
      row.failed = true;
      row.error = cols[5].size() > 7 ? cols[5].substr(7) : "";
    } else {
      row.metrics.sdr_db = std::stod(cols[2]);
      row.metrics.si_sdr_db = std::stod(cols[3]);
      row.metrics.si_sdr_improvement_db = std::stod(cols[4]);
      std::stringstream fs(cols[5]);
      std::string flag;
      while (std::getline(fs, flag, ';')) {
        if (flag == "sdr_inf") row.metrics.sdr_capped = true;
        if (flag == "si_sdr_inf") row.metrics.si_sdr_capped = true;
        if (flag == "si_sdri_inf") row.metrics.improvement_capped = true;
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_report_json(const std::string& path, const EvalReport& report) {
  nlohmann::json j = {{"format", "bgtse-report-v1"},
                      {"condition_tags", report.condition_tags},
                      {"row_count", report.rows.size()},
                      {"systems", nlohmann::json::array()}};
  for (const auto& agg : report.aggregates()) {
    j["systems"].push_back({{"system", agg.system},
                            {"count", agg.count},
                            {"failed_count", agg.failed_count},
                            {"mean_sdr_db", agg.mean_sdr_db},
                            {"median_sdr_db", agg.median_sdr_db},
                            {"mean_si_sdr_db", agg.mean_si_sdr_db},
                            {"median_si_sdr_db", agg.median_si_sdr_db},
                            {"mean_si_sdri_db", agg.mean_si_sdri_db},
                            {"median_si_sdri_db", agg.median_si_sdri_db}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path + ": write failed");
}

void write_sweep_csv(const std::string& path, const DoaSweepTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "error_deg,bin,scene_count,mean_si_sdri_db\n";
  for (const auto& c : table.cells) {
    out << format_db(c.error_deg) << ',' << c.bin << ',' << c.scene_count << ','
        << format_db(c.mean_si_sdri_db) << '\n';
  }
  if (!out) throw IoError(path + ": write failed");
}

void write_sweep_dat(const std::string& path, const DoaSweepTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << "# error_deg mean_si_sdri_db scene_count  (one block per bin)\n";
  std::vector<std::string> bins;
  for (const auto& c : table.cells)
    if (std::find(bins.begin(), bins.end(), c.bin) == bins.end()) bins.push_back(c.bin);
  for (const auto& bin : bins) {
    out << "# bin " << bin << '\n';
    for (const auto& c : table.cells) {
      if (c.bin != bin) continue;
      out << format_db(c.error_deg) << ' ' << format_db(c.mean_si_sdri_db) << ' '
          << c.scene_count << '\n';
    }
    out << '\n';
  }
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace bgtse
