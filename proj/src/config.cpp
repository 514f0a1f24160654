#include "timesynth/config.hpp"

#include <cstdlib>

#include "timesynth/error.hpp"
#include "timesynth/io.hpp"

namespace timesynth {

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  for (auto kind : {models::ModelKind::Linear, models::ModelKind::DLinear, models::ModelKind::Fits,
                    models::ModelKind::Mlp}) {
    cfg.plan.models.push_back(ModelSpec::defaults(kind));
  }
  cfg.plan.occasions = default_occasions();
  return cfg;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  RunConfig cfg;
  nlohmann::json plan_part = j;
  if (j.contains("output_dir")) {
    cfg.output_dir = j.at("output_dir").get<std::string>();
    plan_part.erase("output_dir");
  }
  const RunConfig base = RunConfig::defaults();
  cfg.plan = plan_from_json(plan_part);
  if (!j.contains("models")) {
    for (const auto& m : base.plan.models) {
      cfg.plan.models.push_back(ModelSpec::defaults(m.model.kind, cfg.plan.windows.history, cfg.plan.windows.horizon));
      cfg.plan.models.back().model.sample_rate_hz = cfg.plan.grid.sample_rate_hz;
    }
  }
  if (!j.contains("occasions")) cfg.plan.occasions = base.plan.occasions;
  return cfg;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  auto j = plan_to_json(cfg.plan);
  if (!cfg.output_dir.empty()) j["output_dir"] = cfg.output_dir;
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  try {
    return run_config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

std::filesystem::path resolve_output_dir(const RunConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("TIMESYNTH_OUT"); env && *env) return env;
  return "timesynth_out";
}

}  // namespace timesynth
