#pragma once

#include <string>
#include <vector>

#include "bgtse/pipeline.hpp"
#include "bgtse/room_sim.hpp"

namespace bgtse {

// One corpus scene: file locations relative to the manifest root plus the
// geometry/DOA side information a pipeline needs to run it.
struct ManifestRow {
  std::string id;
  std::string spec_path;
  std::string mixture_path;
  std::string target_path;
  std::string interferer_path;
  ArrayGeometry geometry;
  Doa target_doa;
  Doa interferer_doa;
};

struct Manifest {
  std::string root;  // directory all row paths resolve against
  double sample_rate = 8000.0;
  std::vector<ManifestRow> rows;

  std::string resolve(const std::string& relative) const;
  // Unique ids; with check_files, referenced files must exist.
  void validate(bool check_files) const;
};

// Layered tool configuration: file values overridable by CLI flags.
struct ToolConfig {
  uint64_t seed = 0;
  double sample_rate = 8000.0;
  PipelineConfig pipeline;
  SceneRanges ranges;
  std::string out_dir = "out";

  void validate() const;
};

// Scene specs serialize as "bgtse-scene-v1" JSON, manifests as
// "bgtse-manifest-v1", tool configs as "bgtse-config-v1". All round-trip
// exactly (doubles are emitted with 17 significant digits).
void save_scene(const std::string& path, const SceneSpec& spec);
SceneSpec load_scene(const std::string& path);

void save_manifest(const std::string& path, const Manifest& m);
Manifest load_manifest(const std::string& path, bool check_files = true);

void save_tool_config(const std::string& path, const ToolConfig& cfg);
ToolConfig load_tool_config(const std::string& path);

// Enum <-> name mappings shared by config files and CLI flags.
std::string frontend_kind_name(FrontendKind kind);
FrontendKind frontend_kind_from_name(const std::string& name);
std::string extractor_kind_name(ExtractorKind kind);
ExtractorKind extractor_kind_from_name(const std::string& name);

}  // namespace bgtse
