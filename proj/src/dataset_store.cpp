#include "timesynth/dataset_store.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "timesynth/error.hpp"
#include "timesynth/io.hpp"

namespace timesynth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace io {

void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace io

namespace {

json component_json(double a, double f, double beta, double fmod) {
  return {{"amplitude", a}, {"frequency", f}, {"mod_depth", beta}, {"mod_frequency", fmod}};
}

json interval_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

Interval interval_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("range must be a two-element array [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

json spec_to_json(const SignalSpec& spec) {
  if (const auto* d = std::get_if<DriftHarmonicParams>(&spec)) {
    return {{"epsilon", d->epsilon}, {"frequency", d->frequency}, {"phase", d->phase}, {"trend", d->trend}};
  }
  if (const auto* s = std::get_if<SpmHarmonicParams>(&spec)) {
    json j = component_json(s->amplitude, s->frequency, s->mod_depth, s->mod_frequency);
    j["offset"] = s->offset;
    return j;
  }
  const auto& p = std::get<DpmHarmonicParams>(spec);
  json comps = json::array();
  for (const auto& c : p.components) comps.push_back(component_json(c.amplitude, c.frequency, c.mod_depth, c.mod_frequency));
  return {{"components", comps}, {"offset", p.offset}};
}

SignalSpec spec_from_json(Family family, const json& j) {
  switch (family) {
    case Family::Drift:
      return DriftHarmonicParams{j.at("epsilon").get<double>(), j.at("frequency").get<double>(),
                                 j.at("phase").get<double>(), j.at("trend").get<double>()};
    case Family::Spm:
      return SpmHarmonicParams{j.at("amplitude").get<double>(), j.at("frequency").get<double>(),
                               j.at("mod_depth").get<double>(), j.at("mod_frequency").get<double>(),
                               j.at("offset").get<double>()};
    case Family::Dpm: {
      DpmHarmonicParams p;
      const auto& comps = j.at("components");
      if (comps.size() != 2) throw InvalidInput("dpm spec needs exactly two components");
      for (std::size_t i = 0; i < 2; ++i) {
        p.components[i] = {comps[i].at("amplitude").get<double>(), comps[i].at("frequency").get<double>(),
                           comps[i].at("mod_depth").get<double>(), comps[i].at("mod_frequency").get<double>()};
      }
      p.offset = j.at("offset").get<double>();
      return p;
    }
  }
  throw InvalidInput("unknown family");
}

json ranges_to_json(const FamilyRanges& r) {
  return {{"frequency", interval_json(r.frequency)},   {"epsilon", interval_json(r.epsilon)},
          {"phase", interval_json(r.phase)},           {"trend", interval_json(r.trend)},
          {"amplitude", interval_json(r.amplitude)},   {"mod_depth", interval_json(r.mod_depth)},
          {"mod_frequency", interval_json(r.mod_frequency)}, {"offset", interval_json(r.offset)}};
}

FamilyRanges ranges_from_json(const json& j, const FamilyRanges& base) {
  FamilyRanges r = base;
  const std::pair<const char*, Interval*> fields[] = {
      {"frequency", &r.frequency}, {"epsilon", &r.epsilon},     {"phase", &r.phase},
      {"trend", &r.trend},         {"amplitude", &r.amplitude}, {"mod_depth", &r.mod_depth},
      {"mod_frequency", &r.mod_frequency}, {"offset", &r.offset}};
  for (const auto& [key, dst] : fields) {
    if (j.contains(key)) *dst = interval_from(j.at(key));
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const auto& [key, dst] : fields) known = known || item.key() == key;
    if (!known) throw ConfigError("unknown range parameter '" + item.key() + "'");
  }
  r.validate();
  return r;
}

json perturbation_to_json(const Perturbation& p) {
  if (p.clean()) return nullptr;
  json j = {{"kind", p.kind}, {"seed", p.seed}};
  if (p.kind == "noise") j["snr_db"] = p.snr_db;
  if (p.kind == "shift") j["shift_id"] = p.shift_id;
  return j;
}

Perturbation perturbation_from_json(const json& j) {
  Perturbation p;
  if (j.is_null()) return p;
  p.kind = j.at("kind").get<std::string>();
  p.seed = j.value("seed", std::uint64_t{0});
  p.snr_db = j.value("snr_db", 0.0);
  p.shift_id = j.value("shift_id", std::string{});
  return p;
}

std::string series_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "series_%03zu.csv", index);
  return buf;
}

json manifest_to_json(const DatasetManifest& m) {
  json entries = json::array();
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    entries.push_back({{"id", e.id},
                       {"split", to_string(e.split)},
                       {"seed", e.seed},
                       {"file", series_file_name(i)},
                       {"params", spec_to_json(e.spec)}});
  }
  return {{"name", m.name},
          {"family", to_string(m.family)},
          {"grid", {{"sample_rate_hz", m.grid.sample_rate_hz}, {"duration_s", m.grid.duration_s}}},
          {"ranges", ranges_to_json(m.ranges)},
          {"master_seed", m.master_seed},
          {"split_sizes", {{"train", m.sizes.train}, {"val", m.sizes.validation}, {"test", m.sizes.test}}},
          {"perturbation", perturbation_to_json(m.perturbation)},
          {"series", entries}};
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  m.name = j.at("name").get<std::string>();
  m.family = parse_family(j.at("family").get<std::string>());
  m.grid.sample_rate_hz = j.at("grid").at("sample_rate_hz").get<double>();
  m.grid.duration_s = j.at("grid").at("duration_s").get<double>();
  m.ranges = ranges_from_json(j.at("ranges"), FamilyRanges::defaults(m.family));
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  const auto& sizes = j.at("split_sizes");
  m.sizes = {sizes.at("train").get<std::size_t>(), sizes.at("val").get<std::size_t>(),
             sizes.at("test").get<std::size_t>()};
  m.perturbation = perturbation_from_json(j.value("perturbation", json(nullptr)));
  for (const auto& e : j.at("series")) {
    m.entries.push_back({e.at("id").get<std::string>(), parse_split(e.at("split").get<std::string>()),
                         spec_from_json(m.family, e.at("params")), e.at("seed").get<std::uint64_t>()});
  }
  return m;
}

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& grid = dataset.manifest.grid;
  for (std::size_t i = 0; i < dataset.series.size(); ++i) {
    std::string csv = "t,value\n";
    const auto& values = dataset.series[i].values;
    csv.reserve(values.size() * 40);
    for (std::size_t k = 0; k < values.size(); ++k) {
      csv += io::format_double(grid.time(k));
      csv += ',';
      csv += io::format_double(values[k]);
      csv += '\n';
    }
    io::write_atomic(dir / series_file_name(i), csv);
  }
  // The manifest goes last so its presence implies complete series files.
  io::write_atomic(dir / "manifest.json", manifest_to_json(dataset.manifest).dump(1) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
  Dataset ds;
  ds.manifest = manifest_from_json(json::parse(io::read_text(dir / "manifest.json")));
  for (std::size_t i = 0; i < ds.manifest.entries.size(); ++i) {
    const auto& e = ds.manifest.entries[i];
    std::istringstream in(io::read_text(dir / series_file_name(i)));
    std::string line;
    std::getline(in, line);
    if (line != "t,value") throw InvalidInput(dir.string() + ": bad series header '" + line + "'");
    std::vector<double> values;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw InvalidInput(dir.string() + ": malformed row '" + line + "'");
      values.push_back(std::stod(line.substr(comma + 1)));
    }
    ds.series.push_back({e.id, e.split, e.spec, e.seed, std::move(values), ds.manifest.perturbation});
  }
  return ds;
}

bool dataset_matches(const DatasetManifest& manifest, const fs::path& dir) {
  const auto path = dir / "manifest.json";
  if (!fs::exists(path)) return false;
  try {
    if (json::parse(io::read_text(path)) != manifest_to_json(manifest)) return false;
  } catch (const std::exception&) {
    return false;
  }
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    if (!fs::exists(dir / series_file_name(i))) return false;
  }
  return true;
}

}  // namespace timesynth
