#include "timesynth/cli.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "timesynth/config.hpp"
#include "timesynth/error.hpp"
#include "timesynth/io.hpp"
#include "timesynth/stats_lmm.hpp"

namespace timesynth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string families;
  std::string models;
  std::string occasions;
  std::optional<std::size_t> jobs;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration");
  cmd->add_option("--seed", f.seed, "master seed (overrides the config)");
  cmd->add_option("--families", f.families, "comma list of drift, spm, dpm");
  cmd->add_option("--models", f.models, "comma list of linear, dlinear, fits, mlp");
  cmd->add_option("--occasions", f.occasions, "comma list of clean, noise:<dB>, shift:<id>, all");
  cmd->add_option("--jobs", f.jobs, "concurrent training tasks");
  cmd->add_option("--out", f.out, "output directory (default: $TIMESYNTH_OUT or ./timesynth_out)");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Config file first, then flags.
RunConfig resolve_config(const CommonFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig::defaults() : load_run_config(f.config);
  auto& plan = cfg.plan;
  if (f.seed) plan.seed = *f.seed;
  if (f.jobs) plan.jobs = *f.jobs;
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (!f.families.empty()) {
    plan.families.clear();
    for (const auto& name : split_list(f.families)) plan.families.push_back(parse_family(name));
  }
  if (!f.models.empty()) {
    std::vector<ModelSpec> chosen;
    for (const auto& name : split_list(f.models)) {
      const auto kind = models::parse_model_kind(name);
      // Prefer a spec from the config file with that name or kind.
      const auto it = std::find_if(plan.models.begin(), plan.models.end(), [&](const ModelSpec& m) {
        return m.name == name || m.model.kind == kind;
      });
      if (it != plan.models.end()) {
        chosen.push_back(*it);
      } else {
        chosen.push_back(ModelSpec::defaults(kind, plan.windows.history, plan.windows.horizon));
        chosen.back().model.sample_rate_hz = plan.grid.sample_rate_hz;
      }
    }
    plan.models = std::move(chosen);
  }
  if (!f.occasions.empty()) plan.occasions = parse_occasions(f.occasions);
  plan.validate();
  return cfg;
}

fs::path datasets_root(const RunConfig& cfg) { return resolve_output_dir(cfg) / "datasets"; }
fs::path bundle_root(const RunConfig& cfg) { return resolve_output_dir(cfg) / "bundle"; }

int cmd_generate(const CommonFlags& flags, std::ostream& out) {
  RunConfig cfg = resolve_config(flags);
  // Shifted test sets are always produced alongside the clean data.
  ExperimentPlan plan = cfg.plan;
  for (ShiftId id : {ShiftId::Shift1, ShiftId::Shift2, ShiftId::Shift3, ShiftId::Shift4}) {
    const auto occ = Occasion::shifted(id);
    if (std::find(plan.occasions.begin(), plan.occasions.end(), occ) == plan.occasions.end()) {
      plan.occasions.push_back(occ);
    }
  }
  const auto root = datasets_root(cfg);
  const auto catalog = DatasetCatalog::generate(plan);
  const auto written = catalog.write(root);
  io::write_atomic(root / "config.json", run_config_to_json(cfg).dump(2) + "\n");
  std::size_t total = 0;
  for (Family f : plan.families) {
    out << (DatasetCatalog::clean_dir(root, f) / "manifest.json").string() << "\n";
    ++total;
    for (const auto& o : plan.occasions) {
      if (o.kind != Occasion::Kind::Shift) continue;
      out << (DatasetCatalog::shift_dir(root, f, o.shift) / "manifest.json").string() << "\n";
      ++total;
    }
  }
  out << written.size() << " of " << total << " datasets written (the rest were up to date)\n";
  return 0;
}

int cmd_run(const CommonFlags& flags, bool generate, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(flags);
  const auto catalog = DatasetCatalog::load(cfg.plan, datasets_root(cfg), generate);
  const auto result = run_plan(cfg.plan, catalog);
  const auto dir = bundle_root(cfg);
  write_bundle(result, cfg.plan, dir);
  out << format_summary(result);
  out << "bundle: " << dir.string() << "\n";
  std::size_t failed = 0;
  for (const auto& c : result.cells) {
    if (!c.ok) {
      ++failed;
      err << "cell " << c.cell_id() << " failed: " << c.error << "\n";
    }
  }
  if (failed) {
    err << failed << " of " << result.cells.size() << " cells failed\n";
    return 1;
  }
  return 0;
}

int cmd_stats(const CommonFlags& flags, const std::string& metrics_path, const std::string& metric,
              std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(flags);
  const fs::path path = metrics_path.empty() ? bundle_root(cfg) / "metrics.csv" : fs::path(metrics_path);
  const auto rows = read_metrics_csv(path);
  if (rows.empty()) throw ConfigError(path.string() + ": no rows");
  const auto design = stats::build_design(rows, metric);
  if (design.model_levels.size() < 2) err << "warning: only one model in the table; no contrasts to report\n";
  for (const auto& u : design.unestimable) err << "warning: unestimable interaction dropped: " << u << "\n";
  const auto fit = stats::fit_reml(design);
  if (fit.boundary != stats::Boundary::None) {
    err << "warning: variance ratio at the " << (fit.boundary == stats::Boundary::Lower ? "lower" : "upper")
        << " search boundary\n";
  }
  const auto table = stats::contrasts(fit, design);
  const auto csv = stats::format_contrasts_csv(table);
  const fs::path dir = path.parent_path() / "stats";
  io::write_atomic(dir / ("contrasts_" + design.metric + ".csv"), csv);
  io::write_atomic(dir / ("lmm_" + design.metric + ".json"), stats::fit_to_json(fit, design).dump(2) + "\n");
  out << csv;
  out << "sigma2_u " << fit.sigma2_u << ", sigma2_e " << fit.sigma2_e << ", REML log-likelihood " << fit.reml_loglik
      << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// plot-data

struct CellData {
  json report;
  std::string family, model, occasion;
};

std::vector<CellData> read_bundle(const fs::path& dir, std::vector<std::string>& missing) {
  const auto bundle = json::parse(io::read_text(dir / "bundle.json"));
  std::vector<CellData> cells;
  for (const auto& entry : bundle.at("cells")) {
    if (entry.at("status") != "ok") {
      missing.push_back(entry.at("cell").get<std::string>());
      continue;
    }
    CellData c;
    c.report = json::parse(io::read_text(dir / entry.at("file").get<std::string>()));
    c.family = c.report.at("family");
    c.model = c.report.at("model");
    c.occasion = c.report.at("occasion");
    cells.push_back(std::move(c));
  }
  return cells;
}

std::string plot_horizon(const std::vector<CellData>& cells) {
  std::string csv = "model,family,h,mse\n";
  for (const auto& c : cells) {
    if (c.occasion != "clean") continue;
    const auto& curve = c.report.at("horizon_mse");
    for (std::size_t h = 0; h < curve.size(); ++h) {
      csv += c.model + "," + c.family + "," + std::to_string(h + 1) + "," + io::format_double(curve[h].get<double>()) +
             "\n";
    }
  }
  return csv;
}

std::string plot_per_series(const std::vector<CellData>& cells) {
  std::string csv = "family,model,occasion,series_id,mae\n";
  for (const auto& c : cells) {
    for (const auto& s : c.report.at("series")) {
      csv += c.family + "," + c.model + "," + c.occasion + "," + s.at("series_id").get<std::string>() + "," +
             io::format_double(s.at("mae").get<double>()) + "\n";
    }
  }
  return csv;
}

// Phase error by shift band, "none" taken from shift:none or else the clean cell.
std::string plot_shift(const std::vector<CellData>& cells, std::vector<std::string>& missing) {
  std::string csv = "family,model,shift,phase_mean,phase_median\n";
  std::map<std::pair<std::string, std::string>, std::map<std::string, const CellData*>> by;
  for (const auto& c : cells) by[{c.family, c.model}][c.occasion] = &c;
  for (const auto& [key, occ] : by) {
    for (ShiftId id : kAllShifts) {
      const std::string name(to_string(id));
      const CellData* cell = nullptr;
      if (auto it = occ.find("shift:" + name); it != occ.end()) {
        cell = it->second;
      } else if (id == ShiftId::None) {
        if (auto jt = occ.find("clean"); jt != occ.end()) cell = jt->second;
      }
      if (!cell) {
        missing.push_back(key.first + "/" + key.second + "/shift:" + name);
        continue;
      }
      const auto& phase = cell->report.at("aggregate").at("phase_err_deg");
      csv += key.first + "," + key.second + "," + name + "," + io::format_double(phase.at("mean").get<double>()) + "," +
             io::format_double(phase.at("median").get<double>()) + "\n";
    }
  }
  return csv;
}

std::string plot_noise(const std::vector<CellData>& cells) {
  std::string csv = "family,model,snr_db,mae_mean,phase_mean\n";
  for (const auto& c : cells) {
    std::string snr;
    if (c.occasion == "clean") {
      snr = "inf";
    } else if (c.occasion.rfind("noise:", 0) == 0) {
      snr = c.occasion.substr(6);
    } else {
      continue;
    }
    const auto& agg = c.report.at("aggregate");
    csv += c.family + "," + c.model + "," + snr + "," + io::format_double(agg.at("mae").at("mean").get<double>()) +
           "," + io::format_double(agg.at("phase_err_deg").at("mean").get<double>()) + "\n";
  }
  return csv;
}

int cmd_plot_data(const CommonFlags& flags, const std::string& bundle_path, const std::string& kind,
                  std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve_config(flags);
  const fs::path dir = bundle_path.empty() ? bundle_root(cfg) : fs::path(bundle_path);
  std::vector<std::string> missing;
  const auto cells = read_bundle(dir, missing);
  std::string csv;
  if (kind == "horizon_mse") {
    csv = plot_horizon(cells);
  } else if (kind == "per_series_mae") {
    csv = plot_per_series(cells);
  } else if (kind == "shift_phase") {
    csv = plot_shift(cells, missing);
  } else if (kind == "noise_curve") {
    csv = plot_noise(cells);
  } else {
    throw ConfigError("unknown plot kind '" + kind + "' (horizon_mse, per_series_mae, shift_phase, noise_curve)");
  }
  const auto path = dir / "plots" / (kind + ".csv");
  io::write_atomic(path, csv);
  out << path.string() << "\n";
  for (const auto& m : missing) err << "missing cell: " << m << "\n";
  return missing.empty() ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"timesynth: synthetic-signal forecasting benchmark"};
  app.require_subcommand(1);

  CommonFlags gen_flags, run_flags, stats_flags, plot_flags;
  auto* gen = app.add_subcommand("generate", "build clean datasets and shifted test sets");
  add_common(gen, gen_flags);

  auto* run = app.add_subcommand("run", "train, evaluate and write a report bundle");
  add_common(run, run_flags);
  bool generate = false;
  run->add_flag("--generate", generate, "generate missing datasets first");

  auto* st = app.add_subcommand("stats", "mixed-effects contrasts from a metrics table");
  add_common(st, stats_flags);
  std::string metrics_path, metric = "phase";
  st->add_option("--metrics", metrics_path, "metrics CSV (default: <out>/bundle/metrics.csv)");
  st->add_option("--metric", metric, "mae, mse, freq_err_hz, phase_err_deg (or amplitude, frequency, phase)");

  auto* plot = app.add_subcommand("plot-data", "plot-ready CSVs from a report bundle");
  add_common(plot, plot_flags);
  std::string bundle_path, kind = "horizon_mse";
  plot->add_option("--bundle", bundle_path, "bundle directory (default: <out>/bundle)");
  plot->add_option("--kind", kind, "horizon_mse, per_series_mae, shift_phase, noise_curve");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*gen) return cmd_generate(gen_flags, out);
    if (*run) return cmd_run(run_flags, generate, out, err);
    if (*st) return cmd_stats(stats_flags, metrics_path, metric, out, err);
    if (*plot) return cmd_plot_data(plot_flags, bundle_path, kind, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"timesynth"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace timesynth
