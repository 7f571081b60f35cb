#include "bgtse/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace bgtse {

namespace {

using nlohmann::json;

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v[0], v[1], v[2]}); }

Eigen::Vector3d vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json doa_to_json(const Doa& d) {
  return {{"azimuth_deg", d.azimuth_deg}, {"elevation_deg", d.elevation_deg}};
}

Doa doa_from_json(const json& j) {
  return {j.at("azimuth_deg").get<double>(), j.at("elevation_deg").get<double>()};
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open for reading");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what());
  }
}

void write_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path + ": write failed");
}

void expect_format(const json& j, const std::string& path, const char* format) {
  if (j.value("format", "") != format)
    throw ConfigError(path + ": expected format \"" + format + "\"");
}

json stft_to_json(const StftConfig& cfg) {
  return {{"window_size", cfg.window_size}, {"hop", cfg.hop}, {"fft_size", cfg.fft_size}};
}

StftConfig stft_from_json(const json& j, const StftConfig& defaults) {
  StftConfig cfg = defaults;
  cfg.window_size = j.value("window_size", cfg.window_size);
  cfg.hop = j.value("hop", cfg.hop);
  cfg.fft_size = j.value("fft_size", cfg.fft_size);
  return cfg;
}

}  // namespace

std::string frontend_kind_name(FrontendKind kind) {
  switch (kind) {
    case FrontendKind::kDsb: return "dsb";
    case FrontendKind::kSdb: return "sdb";
    case FrontendKind::kMpdr: return "mpdr";
  }
  throw ConfigError("unknown frontend kind");
}

FrontendKind frontend_kind_from_name(const std::string& name) {
  if (name == "dsb") return FrontendKind::kDsb;
  if (name == "sdb") return FrontendKind::kSdb;
  if (name == "mpdr") return FrontendKind::kMpdr;
  throw ConfigError("unknown frontend kind \"" + name + "\" (use dsb, sdb, or mpdr)");
}

std::string extractor_kind_name(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::kOracleIrm: return "oracle-irm";
    case ExtractorKind::kOracleSignal: return "oracle-signal";
    case ExtractorKind::kCoherenceMask: return "coherence-mask";
    case ExtractorKind::kExternalCommand: return "external-command";
  }
  throw ConfigError("unknown extractor kind");
}

ExtractorKind extractor_kind_from_name(const std::string& name) {
  if (name == "oracle-irm") return ExtractorKind::kOracleIrm;
  if (name == "oracle-signal") return ExtractorKind::kOracleSignal;
  if (name == "coherence-mask") return ExtractorKind::kCoherenceMask;
  if (name == "external-command") return ExtractorKind::kExternalCommand;
  throw ConfigError("unknown extractor kind \"" + name +
                    "\" (use oracle-irm, oracle-signal, coherence-mask, or external-command)");
}

void save_scene(const std::string& path, const SceneSpec& spec) {
  spec.validate();
  json j = {
      {"format", "bgtse-scene-v1"},
      {"seed", spec.seed},
      {"sample_rate", spec.sample_rate},
      {"room",
       {{"dimensions", vec3_to_json(spec.room.dimensions)},
        {"t60", spec.room.t60},
        {"c_sound", spec.room.c_sound}}},
      {"array",
       {{"center", vec3_to_json(spec.array_center)},
        {"radius", spec.array_radius},
        {"mic_count", spec.mic_count}}},
      {"sir_db", spec.sir_db},
      {"sources", json::array()},
  };
  for (size_t s = 0; s < 2; ++s) {
    j["sources"].push_back({{"position", vec3_to_json(spec.source_positions[s])},
                            {"doa", doa_to_json(spec.source_doas[s])}});
  }
  write_file(path, j);
}

SceneSpec load_scene(const std::string& path) {
  const json j = parse_file(path);
  expect_format(j, path, "bgtse-scene-v1");
  try {
    SceneSpec spec;
    spec.seed = j.at("seed").get<uint64_t>();
    spec.sample_rate = j.at("sample_rate").get<double>();
    const json& room = j.at("room");
    spec.room.dimensions = vec3_from_json(room.at("dimensions"));
    spec.room.t60 = room.at("t60").get<double>();
    spec.room.c_sound = room.at("c_sound").get<double>();
    const json& array = j.at("array");
    spec.array_center = vec3_from_json(array.at("center"));
    spec.array_radius = array.at("radius").get<double>();
    spec.mic_count = array.at("mic_count").get<int>();
    spec.sir_db = j.at("sir_db").get<double>();
    const json& sources = j.at("sources");
    if (!sources.is_array() || sources.size() != 2)
      throw ConfigError("expected exactly 2 sources");
    for (size_t s = 0; s < 2; ++s) {
      spec.source_positions[s] = vec3_from_json(sources[s].at("position"));
      spec.source_doas[s] = doa_from_json(sources[s].at("doa"));
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": bad scene spec: " + e.what());
  }
}

std::string Manifest::resolve(const std::string& relative) const {
  return (std::filesystem::path(root) / relative).string();
}

void Manifest::validate(bool check_files) const {
  if (!(sample_rate > 0.0)) throw ConfigError("manifest: sample_rate must be > 0");
  std::set<std::string> ids;
  for (const auto& row : rows) {
    if (row.id.empty()) throw ConfigError("manifest: empty scene id");
    if (!ids.insert(row.id).second)
      throw ConfigError("manifest: duplicate scene id \"" + row.id + "\"");
    row.geometry.validate();
    if (check_files) {
      for (const std::string* p :
           {&row.spec_path, &row.mixture_path, &row.target_path, &row.interferer_path}) {
        if (!std::filesystem::exists(resolve(*p)))
          throw ConfigError("manifest: missing file " + resolve(*p) + " for scene \"" + row.id +
                            "\"");
      }
    }
  }
}

void save_manifest(const std::string& path, const Manifest& m) {
  m.validate(false);
  json j = {{"format", "bgtse-manifest-v1"},
            {"root", m.root},
            {"sample_rate", m.sample_rate},
            {"scenes", json::array()}};
  for (const auto& row : m.rows) {
    json mics = json::array();
    for (const auto& p : row.geometry.mic_positions) mics.push_back(vec3_to_json(p));
    j["scenes"].push_back({{"id", row.id},
                           {"spec", row.spec_path},
                           {"mixture", row.mixture_path},
                           {"target", row.target_path},
                           {"interferer", row.interferer_path},
                           {"geometry", std::move(mics)},
                           {"target_doa", doa_to_json(row.target_doa)},
                           {"interferer_doa", doa_to_json(row.interferer_doa)}});
  }
  write_file(path, j);
}

Manifest load_manifest(const std::string& path, bool check_files) {
  const json j = parse_file(path);
  expect_format(j, path, "bgtse-manifest-v1");
  try {
    Manifest m;
    m.root = j.at("root").get<std::string>();
    // a relative root is taken relative to the manifest's own directory
    if (!m.root.empty() && std::filesystem::path(m.root).is_relative())
      m.root = (std::filesystem::path(path).parent_path() / m.root).string();
    m.sample_rate = j.at("sample_rate").get<double>();
    for (const json& row_json : j.at("scenes")) {
      ManifestRow row;
      row.id = row_json.at("id").get<std::string>();
      row.spec_path = row_json.at("spec").get<std::string>();
      row.mixture_path = row_json.at("mixture").get<std::string>();
      row.target_path = row_json.at("target").get<std::string>();
      row.interferer_path = row_json.at("interferer").get<std::string>();
      for (const json& mic : row_json.at("geometry"))
        row.geometry.mic_positions.push_back(vec3_from_json(mic));
      row.target_doa = doa_from_json(row_json.at("target_doa"));
      row.interferer_doa = doa_from_json(row_json.at("interferer_doa"));
      m.rows.push_back(std::move(row));
    }
    m.validate(check_files);
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": bad manifest: " + e.what());
  }
}

void ToolConfig::validate() const {
  pipeline.validate();
  ranges.validate();
  if (!(sample_rate > 0.0)) throw ConfigError("config: sample_rate must be > 0");
  if (out_dir.empty()) throw ConfigError("config: out_dir must not be empty");
}

void save_tool_config(const std::string& path, const ToolConfig& cfg) {
  cfg.validate();
  const auto range_to_json = [](const Range& r) { return json::array({r.lo, r.hi}); };
  json j = {
      {"format", "bgtse-config-v1"},
      {"seed", cfg.seed},
      {"sample_rate", cfg.sample_rate},
      {"out_dir", cfg.out_dir},
      {"pipeline",
       {{"frontend", frontend_kind_name(cfg.pipeline.frontend_kind)},
        {"frontend_stft", stft_to_json(cfg.pipeline.frontend_stft)},
        {"backend_enabled", cfg.pipeline.backend_enabled},
        {"backend_stft", stft_to_json(cfg.pipeline.backend_stft)},
        {"ref_channel", cfg.pipeline.ref_channel},
        {"loading", cfg.pipeline.loading},
        {"c_sound", cfg.pipeline.c_sound},
        {"extractor",
         {{"kind", extractor_kind_name(cfg.pipeline.extractor.kind)},
          {"irm_exponent", cfg.pipeline.extractor.irm_exponent},
          {"coherence_smoothing", cfg.pipeline.extractor.coherence_smoothing},
          {"command", cfg.pipeline.extractor.command}}}}},
      {"ranges",
       {{"room_length", range_to_json(cfg.ranges.room_length)},
        {"room_width", range_to_json(cfg.ranges.room_width)},
        {"room_height", range_to_json(cfg.ranges.room_height)},
        {"t60", range_to_json(cfg.ranges.t60)},
        {"array_radius", range_to_json(cfg.ranges.array_radius)},
        {"mic_count", cfg.ranges.mic_count},
        {"source_distance", range_to_json(cfg.ranges.source_distance)},
        {"sir_db", range_to_json(cfg.ranges.sir_db)},
        {"angular_spacing", range_to_json(cfg.ranges.angular_spacing)},
        {"array_z", range_to_json(cfg.ranges.array_z)},
        {"array_wall_margin", cfg.ranges.array_wall_margin},
        {"source_wall_margin", cfg.ranges.source_wall_margin},
        {"c_sound", cfg.ranges.c_sound}}},
  };
  write_file(path, j);
}

ToolConfig load_tool_config(const std::string& path) {
  const json j = parse_file(path);
  expect_format(j, path, "bgtse-config-v1");
  try {
    ToolConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.sample_rate = j.value("sample_rate", cfg.sample_rate);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    if (j.contains("pipeline")) {
      const json& p = j.at("pipeline");
      if (p.contains("frontend"))
        cfg.pipeline.frontend_kind = frontend_kind_from_name(p.at("frontend").get<std::string>());
      if (p.contains("frontend_stft"))
        cfg.pipeline.frontend_stft = stft_from_json(p.at("frontend_stft"), cfg.pipeline.frontend_stft);
      cfg.pipeline.backend_enabled = p.value("backend_enabled", cfg.pipeline.backend_enabled);
      if (p.contains("backend_stft"))
        cfg.pipeline.backend_stft = stft_from_json(p.at("backend_stft"), cfg.pipeline.backend_stft);
      cfg.pipeline.ref_channel = p.value("ref_channel", cfg.pipeline.ref_channel);
      cfg.pipeline.loading = p.value("loading", cfg.pipeline.loading);
      cfg.pipeline.c_sound = p.value("c_sound", cfg.pipeline.c_sound);
      if (p.contains("extractor")) {
        const json& e = p.at("extractor");
        if (e.contains("kind"))
          cfg.pipeline.extractor.kind = extractor_kind_from_name(e.at("kind").get<std::string>());
        cfg.pipeline.extractor.irm_exponent =
            e.value("irm_exponent", cfg.pipeline.extractor.irm_exponent);
        cfg.pipeline.extractor.coherence_smoothing =
            e.value("coherence_smoothing", cfg.pipeline.extractor.coherence_smoothing);
        cfg.pipeline.extractor.command = e.value("command", cfg.pipeline.extractor.command);
      }
    }
    if (j.contains("ranges")) {
      const json& r = j.at("ranges");
      const auto range = [&r](const char* name, Range fallback) {
        if (!r.contains(name)) return fallback;
        const json& a = r.at(name);
        if (!a.is_array() || a.size() != 2)
          throw ConfigError(std::string("range ") + name + " must be [lo, hi]");
        return Range{a[0].get<double>(), a[1].get<double>()};
      };
      cfg.ranges.room_length = range("room_length", cfg.ranges.room_length);
      cfg.ranges.room_width = range("room_width", cfg.ranges.room_width);
      cfg.ranges.room_height = range("room_height", cfg.ranges.room_height);
      cfg.ranges.t60 = range("t60", cfg.ranges.t60);
      cfg.ranges.array_radius = range("array_radius", cfg.ranges.array_radius);
      cfg.ranges.mic_count = r.value("mic_count", cfg.ranges.mic_count);
      cfg.ranges.source_distance = range("source_distance", cfg.ranges.source_distance);
      cfg.ranges.sir_db = range("sir_db", cfg.ranges.sir_db);
      cfg.ranges.angular_spacing = range("angular_spacing", cfg.ranges.angular_spacing);
      cfg.ranges.array_z = range("array_z", cfg.ranges.array_z);
      cfg.ranges.array_wall_margin = r.value("array_wall_margin", cfg.ranges.array_wall_margin);
      cfg.ranges.source_wall_margin = r.value("source_wall_margin", cfg.ranges.source_wall_margin);
      cfg.ranges.c_sound = r.value("c_sound", cfg.ranges.c_sound);
    }
    cfg.ranges.sample_rate = cfg.sample_rate;
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": bad config: " + e.what());
  }
}

}  // namespace bgtse
