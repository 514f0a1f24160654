#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "timesynth/harness.hpp"

namespace timesynth {

// One JSON document: the experiment plan keys plus "output_dir". Missing keys
// take the defaults (all families, all four models, every default occasion).
struct RunConfig {
  ExperimentPlan plan;
  std::string output_dir;  // empty: TIMESYNTH_OUT, then "timesynth_out"

  static RunConfig defaults();
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path);

// output_dir, else $TIMESYNTH_OUT, else "timesynth_out".
std::filesystem::path resolve_output_dir(const RunConfig& cfg);

}  // namespace timesynth
