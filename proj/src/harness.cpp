#include "timesynth/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <set>
#include <sstream>

#include <omp.h>

#include "timesynth/dataset_store.hpp"
#include "timesynth/error.hpp"
#include "timesynth/io.hpp"
#include "timesynth/kernels.hpp"
#include "timesynth/rng.hpp"

namespace timesynth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string snr_label(double snr_db) {
  if (std::isinf(snr_db)) return snr_db > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", snr_db);
  return buf;
}

std::string family_name(Family f) { return std::string(to_string(f)); }

}  // namespace

// ---------------------------------------------------------------------------
// Occasions and plan

Occasion Occasion::parse(std::string_view label) {
  if (label == "clean") return clean();
  const auto colon = label.find(':');
  if (colon != std::string_view::npos) {
    const auto kind = label.substr(0, colon);
    const std::string arg(label.substr(colon + 1));
    if (kind == "noise") {
      if (arg == "inf") return noise(std::numeric_limits<double>::infinity());
      std::size_t used = 0;
      double db = 0.0;
      try {
        db = std::stod(arg, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == arg.size() && std::isfinite(db)) return noise(db);
      throw ConfigError("occasion '" + std::string(label) + "': SNR must be a number in dB");
    }
    if (kind == "shift") return shifted(parse_shift(arg));
  }
  throw ConfigError("unknown occasion '" + std::string(label) +
                    "' (expected clean, noise:<dB> or shift:<shift1|shift2|none|shift3|shift4>)");
}

std::string Occasion::label() const {
  switch (kind) {
    case Kind::Clean: return "clean";
    case Kind::Noise: return "noise:" + snr_label(snr_db);
    case Kind::Shift: return "shift:" + std::string(to_string(shift));
  }
  return "?";
}

std::vector<Occasion> default_occasions() {
  return {Occasion::clean(),
          Occasion::noise(40),
          Occasion::noise(30),
          Occasion::noise(20),
          Occasion::shifted(ShiftId::Shift1),
          Occasion::shifted(ShiftId::Shift2),
          Occasion::shifted(ShiftId::Shift3),
          Occasion::shifted(ShiftId::Shift4)};
}

std::vector<Occasion> parse_occasions(std::string_view list) {
  std::vector<Occasion> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto end = std::min(list.find(',', start), list.size());
    const auto item = list.substr(start, end - start);
    if (item == "all") {
      for (const auto& o : default_occasions()) out.push_back(o);
    } else if (!item.empty()) {
      out.push_back(Occasion::parse(item));
    }
    start = end + 1;
  }
  if (out.empty()) throw ConfigError("no occasions given");
  return out;
}

ModelSpec ModelSpec::defaults(models::ModelKind kind, std::size_t history, std::size_t horizon) {
  ModelSpec s;
  s.name = std::string(models::to_string(kind));
  s.model.kind = kind;
  s.model.history = history;
  s.model.horizon = horizon;
  s.train = TrainConfig::defaults_for(kind);
  return s;
}

FamilyRanges ExperimentPlan::ranges_for(Family family) const {
  const auto it = ranges.find(family);
  return it == ranges.end() ? FamilyRanges::defaults(family) : it->second;
}

void ExperimentPlan::validate() const {
  if (families.empty()) throw ConfigError("plan: no families");
  if (models.empty()) throw ConfigError("plan: no models");
  if (occasions.empty()) throw ConfigError("plan: no occasions");
  grid.validate();
  windows.validate(grid.n_samples());
  if (sizes.train == 0 || sizes.validation == 0 || sizes.test == 0) {
    throw ConfigError("plan: train, validation and test splits must all be non-empty");
  }
  if (shift_series == 0) throw ConfigError("plan: shift_series must be positive");
  if (jobs == 0) throw ConfigError("plan: jobs must be at least 1");
  std::set<std::string> seen;
  for (const auto& m : models) {
    if (m.name.empty() || m.name.find_first_of(",/\\ :") != std::string::npos) {
      throw ConfigError("plan: model name '" + m.name + "' must be non-empty without , / \\ : or spaces");
    }
    if (!seen.insert(m.name).second) throw ConfigError("plan: duplicate model name '" + m.name + "'");
    m.model.validate();
    m.train.validate();
    if (m.model.history != windows.history || m.model.horizon != windows.horizon) {
      throw ConfigError("plan: model '" + m.name + "' history/horizon differ from the windowing policy");
    }
    if (std::abs(m.model.sample_rate_hz - grid.sample_rate_hz) > 0.0) {
      throw ConfigError("plan: model '" + m.name + "' sample rate differs from the grid");
    }
  }
  std::set<Family> fams(families.begin(), families.end());
  if (fams.size() != families.size()) throw ConfigError("plan: duplicate family");
  std::set<std::string> occ;
  for (const auto& o : occasions) {
    if (!occ.insert(o.label()).second) throw ConfigError("plan: duplicate occasion " + o.label());
    if (o.kind == Occasion::Kind::Noise && std::isnan(o.snr_db)) throw ConfigError("plan: NaN SNR");
  }
  for (Family f : families) ranges_for(f).validate();
}

std::uint64_t dataset_seed(std::uint64_t plan_seed, Family family) {
  return derive_seed(plan_seed, "data/" + family_name(family));
}

std::uint64_t shift_seed(std::uint64_t plan_seed, Family family, ShiftId id) {
  return derive_seed(dataset_seed(plan_seed, family), "shift/" + std::string(to_string(id)));
}

// ---------------------------------------------------------------------------
// Datasets

Dataset expected_clean(const ExperimentPlan& plan, Family family) {
  return build_dataset(family, plan.ranges_for(family), plan.sizes, dataset_seed(plan.seed, family), plan.grid,
                       family_name(family));
}

Dataset expected_shifted(const ExperimentPlan& plan, Family family, ShiftId id) {
  const auto training = plan.ranges_for(family);
  return build_shifted_testset(family, make_shift_spec(family, id, training), training, plan.shift_series,
                               shift_seed(plan.seed, family, id), plan.grid);
}

namespace {

std::vector<ShiftId> shifts_needed(const ExperimentPlan& plan) {
  std::vector<ShiftId> out;
  for (const auto& o : plan.occasions) {
    if (o.kind == Occasion::Kind::Shift && std::find(out.begin(), out.end(), o.shift) == out.end()) {
      out.push_back(o.shift);
    }
  }
  return out;
}

}  // namespace

DatasetCatalog DatasetCatalog::generate(const ExperimentPlan& plan) {
  DatasetCatalog c;
  for (Family f : plan.families) {
    c.clean_.emplace(f, expected_clean(plan, f));
    for (ShiftId id : shifts_needed(plan)) c.shifted_.emplace(std::pair{f, id}, expected_shifted(plan, f, id));
  }
  return c;
}

DatasetCatalog DatasetCatalog::load(const ExperimentPlan& plan, const fs::path& root, bool generate_missing) {
  DatasetCatalog c;
  const auto fetch = [&](Dataset expected, const fs::path& dir) {
    if (dataset_matches(expected.manifest, dir)) return read_dataset(dir);
    if (!generate_missing) {
      throw ConfigError("dataset " + dir.string() +
                        " is missing or was generated with different settings; run `generate` or pass --generate");
    }
    write_dataset(expected, dir);
    return expected;
  };
  for (Family f : plan.families) {
    c.clean_.emplace(f, fetch(expected_clean(plan, f), clean_dir(root, f)));
    for (ShiftId id : shifts_needed(plan)) {
      c.shifted_.emplace(std::pair{f, id}, fetch(expected_shifted(plan, f, id), shift_dir(root, f, id)));
    }
  }
  return c;
}

std::vector<fs::path> DatasetCatalog::write(const fs::path& root) const {
  std::vector<fs::path> written;
  const auto put = [&](const Dataset& ds, const fs::path& dir) {
    if (dataset_matches(ds.manifest, dir)) return;
    write_dataset(ds, dir);
    written.push_back(dir);
  };
  for (const auto& [f, ds] : clean_) put(ds, clean_dir(root, f));
  for (const auto& [key, ds] : shifted_) put(ds, shift_dir(root, key.first, key.second));
  return written;
}

const Dataset& DatasetCatalog::clean(Family family) const {
  const auto it = clean_.find(family);
  if (it == clean_.end()) throw ConfigError("no clean dataset for family " + family_name(family));
  return it->second;
}

const Dataset& DatasetCatalog::shifted(Family family, ShiftId id) const {
  const auto it = shifted_.find({family, id});
  if (it == shifted_.end()) {
    throw ConfigError("no " + std::string(to_string(id)) + " test set for family " + family_name(family));
  }
  return it->second;
}

bool DatasetCatalog::has_shifted(Family family, ShiftId id) const { return shifted_.count({family, id}) > 0; }

fs::path DatasetCatalog::clean_dir(const fs::path& root, Family family) {
  return root / family_name(family) / "clean";
}

fs::path DatasetCatalog::shift_dir(const fs::path& root, Family family, ShiftId id) {
  return root / family_name(family) / std::string(to_string(id));
}

// ---------------------------------------------------------------------------
// Cells

std::string ForecastReport::cell_id() const { return family_name(family) + "/" + model + "/" + occasion.label(); }

namespace {

std::vector<WindowPair> pooled_windows(std::span<const SeriesRecord* const> series, std::size_t history,
                                       std::size_t horizon, std::size_t stride) {
  std::vector<WindowPair> out;
  for (const auto* s : series) {
    auto w = make_windows(s->values, history, horizon, stride);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

std::uint64_t model_seed(const ExperimentPlan& plan, Family family, const ModelSpec& spec, std::string_view what) {
  return derive_seed(plan.seed, std::string(what) + "/" + family_name(family) + "/" + spec.name);
}

std::uint64_t noise_parent_seed(const ExperimentPlan& plan, Family family, const Occasion& occasion) {
  return derive_seed(plan.seed, occasion.label() + "/" + family_name(family));
}

}  // namespace

TrainedModel train_for_family(const ExperimentPlan& plan, const DatasetCatalog& data, Family family,
                              const ModelSpec& spec) {
  const Dataset& ds = data.clean(family);
  // Clean-train rule.
  if (!ds.manifest.perturbation.clean()) {
    throw ConfigError("training data for " + family_name(family) + " is perturbed");
  }
  const auto train_series = ds.split(Split::Train);
  const auto val_series = ds.split(Split::Validation);
  for (const auto* s : train_series) {
    if (!s->perturbation.clean()) throw ConfigError("training series " + s->id + " is perturbed");
  }

  const auto& w = plan.windows;
  const auto train_w = pooled_windows(train_series, w.history, w.horizon, w.train_stride);
  const auto val_w = pooled_windows(val_series, w.history, w.horizon, w.eval_stride);

  TrainedModel out;
  out.summary.init_seed = model_seed(plan, family, spec, "init");
  out.summary.shuffle_seed = model_seed(plan, family, spec, "train");
  TrainConfig cfg = spec.train;
  cfg.seed = out.summary.shuffle_seed;

  auto init = models::make_model(spec.model, out.summary.init_seed);
  auto result = train(*init, train_w, val_w, cfg);
  out.model = std::move(result.model);
  out.summary.epochs_run = result.history.size();
  out.summary.best_epoch = result.best_epoch;
  out.summary.best_val_mse = result.best_val_mse;
  out.summary.early_stopped = result.early_stopped;
  out.summary.train_windows = train_w.size();
  out.summary.val_windows = val_w.size();
  for (const auto* s : train_series) out.train_ids.push_back(s->id);
  for (const auto* s : val_series) out.train_ids.push_back(s->id);
  return out;
}

std::vector<SeriesRecord> evaluation_series(const ExperimentPlan& plan, const DatasetCatalog& data, Family family,
                                            const Occasion& occasion) {
  std::vector<SeriesRecord> out;
  switch (occasion.kind) {
    case Occasion::Kind::Clean:
      for (const auto* s : data.clean(family).split(Split::Test)) out.push_back(*s);
      break;
    case Occasion::Kind::Noise: {
      const auto parent = noise_parent_seed(plan, family, occasion);
      std::uint64_t index = 0;
      for (const auto* s : data.clean(family).split(Split::Test)) {
        out.push_back(inject_noise(*s, {occasion.snr_db, derive_seed(parent, index++)}));
      }
      break;
    }
    case Occasion::Kind::Shift:
      out = data.shifted(family, occasion.shift).series;
      break;
  }
  return out;
}

ForecastReport evaluate_cell(const ExperimentPlan& plan, const DatasetCatalog& data, Family family,
                             const ModelSpec& spec, const TrainedModel& trained, const Occasion& occasion) {
  ForecastReport rep;
  rep.family = family;
  rep.model = spec.name;
  rep.occasion = occasion;
  rep.training = trained.summary;
  if (occasion.kind == Occasion::Kind::Noise) rep.noise_seed = noise_parent_seed(plan, family, occasion);

  const auto series = evaluation_series(plan, data, family, occasion);
  if (series.empty()) throw ConfigError("cell " + rep.cell_id() + ": no evaluation series");

  // Leakage guard.
  const std::set<std::string> seen(trained.train_ids.begin(), trained.train_ids.end());
  for (const auto& s : series) {
    if (seen.count(s.id)) throw Error("cell " + rep.cell_id() + ": evaluation series " + s.id + " was used in training");
  }

  const auto& w = plan.windows;
  std::vector<std::size_t> first_window;
  std::vector<WindowPair> windows;
  for (const auto& s : series) {
    first_window.push_back(windows.size());
    auto sw = make_windows(s.values, w.history, w.horizon, w.eval_stride);
    windows.insert(windows.end(), sw.begin(), sw.end());
  }
  first_window.push_back(windows.size());

  const models::Matrix pred = forecast_windows(*trained.model, windows, spec.train.standardize);

  // Noisy occasions score against the noisy future as well.
  std::vector<kernels::WindowView> views(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    views[i] = {std::span<const double>(pred.col(static_cast<Eigen::Index>(i)).data(), w.horizon), windows[i].future};
  }
  const auto scores = kernels::score_windows(views, plan.grid.sample_rate_hz);

  rep.horizon_mse.assign(w.horizon, 0.0);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    for (std::size_t h = 0; h < w.horizon; ++h) {
      const double d = pred(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(i)) - windows[i].future[h];
      rep.horizon_mse[h] += d * d;
    }
  }
  for (double& v : rep.horizon_mse) v /= static_cast<double>(windows.size());

  std::vector<metrics::SeriesScore> per_series;
  for (std::size_t k = 0; k < series.size(); ++k) {
    std::vector<metrics::WindowScore> ws(scores.begin() + static_cast<std::ptrdiff_t>(first_window[k]),
                                         scores.begin() + static_cast<std::ptrdiff_t>(first_window[k + 1]));
    per_series.push_back(metrics::summarize_series(std::move(ws)));
    rep.series.push_back({series[k].id, per_series.back()});
  }
  rep.aggregate = metrics::aggregate(per_series);
  rep.ok = true;
  return rep;
}

ForecastReport run_cell(const ExperimentPlan& plan, const DatasetCatalog& data, Family family,
                        const ModelSpec& spec, const Occasion& occasion) {
  const auto trained = train_for_family(plan, data, family, spec);
  return evaluate_cell(plan, data, family, spec, trained, occasion);
}

bool PlanResult::complete() const {
  return std::all_of(cells.begin(), cells.end(), [](const ForecastReport& r) { return r.ok; });
}

std::vector<MetricsRow> PlanResult::metrics_rows() const {
  std::vector<MetricsRow> rows;
  for (const auto& c : cells) {
    if (!c.ok) continue;
    for (const auto& s : c.series) {
      rows.push_back({family_name(c.family), c.model, c.occasion.label(), s.series_id, s.score.mean.mae,
                      s.score.mean.mse, s.score.mean.freq_err_hz, s.score.mean.phase_err_deg});
    }
  }
  return rows;
}

PlanResult run_plan(const ExperimentPlan& plan, const DatasetCatalog& data) {
  plan.validate();
  struct Task {
    Family family;
    const ModelSpec* spec;
    TrainedModel trained;
    std::string error;
  };
  std::vector<Task> tasks;
  for (Family f : plan.families) {
    for (const auto& m : plan.models) tasks.push_back({f, &m, {}, {}});
  }

  const auto run_task = [&](Task& t) {
    try {
      t.trained = train_for_family(plan, data, t.family, *t.spec);
    } catch (const std::exception& e) {
      t.error = "training " + family_name(t.family) + "/" + t.spec->name + " failed: " + e.what();
    }
  };
  const auto n_tasks = static_cast<std::ptrdiff_t>(tasks.size());
  if (plan.jobs > 1) {
    // Each task is single-threaded; nested regions inside fall back to one thread.
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(plan.jobs))
    for (std::ptrdiff_t i = 0; i < n_tasks; ++i) run_task(tasks[static_cast<std::size_t>(i)]);
  } else {
    for (auto& t : tasks) run_task(t);
  }

  PlanResult result;
  for (auto& t : tasks) {
    for (const auto& occ : plan.occasions) {
      ForecastReport rep;
      rep.family = t.family;
      rep.model = t.spec->name;
      rep.occasion = occ;
      if (!t.error.empty()) {
        rep.error = t.error;
      } else {
        rep.training = t.trained.summary;
        try {
          rep = evaluate_cell(plan, data, t.family, *t.spec, t.trained, occ);
        } catch (const std::exception& e) {
          rep.error = std::string("evaluation failed: ") + e.what();
        }
      }
      result.cells.push_back(std::move(rep));
    }
    if (t.error.empty()) result.trained.emplace(std::pair{t.family, t.spec->name}, std::move(t.trained));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json train_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay}, {"max_epochs", c.max_epochs},
          {"patience", c.patience},           {"batch_size", c.batch_size},     {"standardize", c.standardize},
          {"beta1", c.beta1},                 {"beta2", c.beta2},               {"epsilon", c.epsilon}};
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

TrainConfig train_from_json(const json& j, TrainConfig c) {
  for (const auto& [key, _] : j.items()) {
    static const std::set<std::string> known{"learning_rate", "weight_decay", "max_epochs", "patience", "batch_size",
                                             "standardize",   "beta1",        "beta2",      "epsilon"};
    if (!known.count(key)) throw ConfigError("train config: unknown key '" + key + "'");
  }
  read_opt(j, "learning_rate", c.learning_rate);
  read_opt(j, "weight_decay", c.weight_decay);
  read_opt(j, "max_epochs", c.max_epochs);
  read_opt(j, "patience", c.patience);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "standardize", c.standardize);
  read_opt(j, "beta1", c.beta1);
  read_opt(j, "beta2", c.beta2);
  read_opt(j, "epsilon", c.epsilon);
  return c;
}

json summary_to_json(const metrics::Summary& s) { return {{"mean", s.mean}, {"median", s.median}}; }

json score_to_json(const metrics::WindowScore& s) {
  return {{"mae", s.mae}, {"mse", s.mse}, {"freq_err_hz", s.freq_err_hz}, {"phase_err_deg", s.phase_err_deg}};
}

}  // namespace

json plan_to_json(const ExperimentPlan& plan) {
  json j;
  j["seed"] = plan.seed;
  json fams = json::array();
  for (Family f : plan.families) fams.push_back(family_name(f));
  j["families"] = fams;
  json ms = json::array();
  for (const auto& m : plan.models) {
    json mj = models::config_to_json(m.model);
    ms.push_back({{"name", m.name}, {"architecture", mj}, {"train", train_to_json(m.train)}});
  }
  j["models"] = ms;
  json occ = json::array();
  for (const auto& o : plan.occasions) occ.push_back(o.label());
  j["occasions"] = occ;
  json ranges = json::object();
  for (Family f : plan.families) ranges[family_name(f)] = ranges_to_json(plan.ranges_for(f));
  j["ranges"] = ranges;
  j["grid"] = {{"sample_rate_hz", plan.grid.sample_rate_hz}, {"duration_s", plan.grid.duration_s}};
  j["split_sizes"] = {{"train", plan.sizes.train}, {"val", plan.sizes.validation}, {"test", plan.sizes.test}};
  j["shift_series"] = plan.shift_series;
  j["windowing"] = {{"history", plan.windows.history},
                    {"horizon", plan.windows.horizon},
                    {"train_stride", plan.windows.train_stride},
                    {"eval_stride", plan.windows.eval_stride}};
  j["jobs"] = plan.jobs;
  return j;
}

ExperimentPlan plan_from_json(const json& j) {
  ExperimentPlan p;
  static const std::set<std::string> known{"seed",        "families",     "models",       "occasions", "ranges",
                                           "grid",        "split_sizes",  "shift_series", "windowing", "jobs"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("plan: unknown key '" + key + "'");
  }
  read_opt(j, "seed", p.seed);
  read_opt(j, "shift_series", p.shift_series);
  read_opt(j, "jobs", p.jobs);
  if (j.contains("grid")) {
    read_opt(j.at("grid"), "sample_rate_hz", p.grid.sample_rate_hz);
    read_opt(j.at("grid"), "duration_s", p.grid.duration_s);
  }
  if (j.contains("windowing")) {
    const auto& w = j.at("windowing");
    read_opt(w, "history", p.windows.history);
    read_opt(w, "horizon", p.windows.horizon);
    read_opt(w, "train_stride", p.windows.train_stride);
    read_opt(w, "eval_stride", p.windows.eval_stride);
  }
  if (j.contains("split_sizes")) {
    const auto& s = j.at("split_sizes");
    read_opt(s, "train", p.sizes.train);
    read_opt(s, "val", p.sizes.validation);
    read_opt(s, "test", p.sizes.test);
  }
  if (j.contains("families")) {
    p.families.clear();
    for (const auto& f : j.at("families")) p.families.push_back(parse_family(f.get<std::string>()));
  }
  if (j.contains("occasions")) {
    p.occasions.clear();
    for (const auto& o : j.at("occasions")) {
      for (const auto& occ : parse_occasions(o.get<std::string>())) p.occasions.push_back(occ);
    }
  }
  if (j.contains("ranges")) {
    for (const auto& [name, rj] : j.at("ranges").items()) {
      const Family f = parse_family(name);
      p.ranges[f] = ranges_from_json(rj, FamilyRanges::defaults(f));
    }
  }
  if (j.contains("models")) {
    for (const auto& mj : j.at("models")) {
      ModelSpec s;
      if (mj.is_string()) {
        s = ModelSpec::defaults(models::parse_model_kind(mj.get<std::string>()), p.windows.history,
                                p.windows.horizon);
      } else {
        const auto arch = mj.value("architecture", json::object());
        const auto kind = models::parse_model_kind(arch.value("kind", mj.value("kind", std::string("linear"))));
        s = ModelSpec::defaults(kind, p.windows.history, p.windows.horizon);
        json merged = models::config_to_json(s.model);
        for (const auto& [k, v] : arch.items()) merged[k] = v;
        s.model = models::config_from_json(merged);
        s.name = mj.value("name", s.name);
        if (mj.contains("train")) s.train = train_from_json(mj.at("train"), s.train);
      }
      s.model.sample_rate_hz = p.grid.sample_rate_hz;
      p.models.push_back(std::move(s));
    }
  }
  return p;
}

json report_to_json(const ForecastReport& r) {
  json j;
  j["cell"] = r.cell_id();
  j["family"] = family_name(r.family);
  j["model"] = r.model;
  j["occasion"] = r.occasion.label();
  j["status"] = r.ok ? "ok" : "failed";
  if (!r.ok) j["error"] = r.error;
  j["training"] = {{"epochs_run", r.training.epochs_run},
                   {"best_epoch", r.training.best_epoch},
                   {"best_val_mse", r.training.best_val_mse},
                   {"early_stopped", r.training.early_stopped},
                   {"train_windows", r.training.train_windows},
                   {"val_windows", r.training.val_windows}};
  j["seeds"] = {{"init", r.training.init_seed}, {"shuffle", r.training.shuffle_seed}, {"noise", r.noise_seed}};
  if (r.ok) {
    j["aggregate"] = {{"series_count", r.aggregate.series_count},
                      {"mae", summary_to_json(r.aggregate.mae)},
                      {"mse", summary_to_json(r.aggregate.mse)},
                      {"freq_err_hz", summary_to_json(r.aggregate.freq_err_hz)},
                      {"phase_err_deg", summary_to_json(r.aggregate.phase_err_deg)}};
    json rows = json::array();
    for (const auto& s : r.series) {
      json row = score_to_json(s.score.mean);
      row["series_id"] = s.series_id;
      row["windows"] = s.score.window_count();
      rows.push_back(row);
    }
    j["series"] = rows;
    j["horizon_mse"] = r.horizon_mse;
  }
  return j;
}

std::string cell_file_name(Family family, std::string_view model, const Occasion& occasion) {
  std::string occ = occasion.label();
  std::replace(occ.begin(), occ.end(), ':', '_');
  return family_name(family) + "__" + std::string(model) + "__" + occ + ".json";
}

void write_bundle(const PlanResult& result, const ExperimentPlan& plan, const fs::path& dir) {
  const json plan_json = plan_to_json(plan);
  io::write_atomic(dir / "plan.json", plan_json.dump(2) + "\n");
  for (const auto& [key, trained] : result.trained) {
    models::save_checkpoint(*trained.model, key.second,
                            dir / "models" / family_name(key.first) / ("model_" + key.second + ".json"));
  }
  json cells = json::array();
  for (const auto& c : result.cells) {
    json rj = report_to_json(c);
    rj["config"] = plan_json;
    const auto file = cell_file_name(c.family, c.model, c.occasion);
    io::write_atomic(dir / "cells" / file, rj.dump(1) + "\n");
    json entry = {{"cell", c.cell_id()}, {"file", "cells/" + file}, {"status", c.ok ? "ok" : "failed"}};
    if (!c.ok) entry["error"] = c.error;
    cells.push_back(entry);
  }
  io::write_atomic(dir / "metrics.csv", format_metrics_csv(result.metrics_rows()));
  // bundle.json last: its presence marks a finished bundle.
  io::write_atomic(dir / "bundle.json",
                   json{{"complete", result.complete()}, {"metrics", "metrics.csv"}, {"cells", cells}, {"config", plan_json}}
                           .dump(2) + "\n");
}

std::string format_summary(const PlanResult& result) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-6s %-10s %-13s %21s %21s %21s %21s\n", "family", "model", "occasion",
                "MAE mean/median", "MSE mean/median", "freq(Hz) mean/median", "phase(deg) mean/median");
  out << buf;
  for (const auto& c : result.cells) {
    if (!c.ok) {
      std::snprintf(buf, sizeof buf, "%-6s %-10s %-13s FAILED: %s\n", family_name(c.family).c_str(), c.model.c_str(),
                    c.occasion.label().c_str(), c.error.c_str());
      out << buf;
      continue;
    }
    const auto& a = c.aggregate;
    std::snprintf(buf, sizeof buf, "%-6s %-10s %-13s %10.4f/%-10.4f %10.4f/%-10.4f %10.4f/%-10.4f %10.3f/%-10.3f\n",
                  family_name(c.family).c_str(), c.model.c_str(), c.occasion.label().c_str(), a.mae.mean,
                  a.mae.median, a.mse.mean, a.mse.median, a.freq_err_hz.mean, a.freq_err_hz.median,
                  a.phase_err_deg.mean, a.phase_err_deg.median);
    out << buf;
  }
  return out.str();
}

}  // namespace timesynth
