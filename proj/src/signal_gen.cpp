#include "timesynth/signal_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

#include "timesynth/error.hpp"
#include "timesynth/kernels.hpp"
#include "timesynth/rng.hpp"

namespace timesynth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_finite(std::initializer_list<double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw InvalidInput(std::string(what) + ": non-finite parameter");
    }
  }
}

// Uniform on [0, 1) from the top 53 bits; identical across standard libraries.
double unit_uniform(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

double draw(Engine& engine, const Interval& interval) {
  return interval.lo + (interval.hi - interval.lo) * unit_uniform(engine);
}

PmComponent draw_component(Engine& engine, const FamilyRanges& r) {
  PmComponent c;
  c.amplitude = draw(engine, r.amplitude);
  c.frequency = draw(engine, r.frequency);
  c.mod_depth = draw(engine, r.mod_depth);
  c.mod_frequency = draw(engine, r.mod_frequency);
  return c;
}

bool carrier_ok(double frequency, double mod_frequency) {
  return frequency > std::max(mod_frequency, kMinCarrierHz);
}

std::optional<std::string> check_component(double amplitude, double frequency, double depth,
                                           double mod_frequency) {
  if (!(amplitude > 0.0)) return "amplitude must be positive";
  if (!(frequency > 0.0)) return "carrier frequency must be positive";
  if (!(depth >= 0.0)) return "modulation depth must be non-negative";
  if (!(mod_frequency > 0.0)) return "modulation frequency must be positive";
  if (!(mod_frequency < frequency)) return "modulation frequency must be below the carrier";
  return std::nullopt;
}

}  // namespace

std::size_t SamplingGrid::n_samples() const {
  return static_cast<std::size_t>(std::llround(sample_rate_hz * duration_s));
}

void SamplingGrid::validate() const {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz) || !(duration_s > 0.0) ||
      !std::isfinite(duration_s) || n_samples() == 0) {
    throw ConfigError("sampling grid needs a positive finite rate and duration");
  }
}

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Drift: return "drift";
    case Family::Spm: return "spm";
    case Family::Dpm: return "dpm";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "drift") return Family::Drift;
  if (name == "spm") return Family::Spm;
  if (name == "dpm") return Family::Dpm;
  throw ConfigError("unknown signal family '" + std::string(name) + "' (expected drift, spm, dpm)");
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Validation;
  if (name == "test") return Split::Test;
  throw InvalidInput("unknown split '" + std::string(name) + "'");
}

Family family_of(const SignalSpec& spec) {
  return static_cast<Family>(spec.index());
}

std::vector<double> parameter_tuple(const SignalSpec& spec) {
  struct Visitor {
    std::vector<double> operator()(const DriftHarmonicParams& p) const {
      return {p.epsilon, p.frequency, p.phase, p.trend};
    }
    std::vector<double> operator()(const SpmHarmonicParams& p) const {
      return {p.amplitude, p.frequency, p.mod_depth, p.mod_frequency, p.offset};
    }
    std::vector<double> operator()(const DpmHarmonicParams& p) const {
      std::vector<double> out;
      for (const auto& c : p.components) {
        out.insert(out.end(), {c.amplitude, c.frequency, c.mod_depth, c.mod_frequency});
      }
      out.push_back(p.offset);
      return out;
    }
  };
  return std::visit(Visitor{}, spec);
}

std::optional<std::string> check_invariants(const SignalSpec& spec, const SamplingGrid& grid) {
  for (double v : parameter_tuple(spec)) {
    if (!std::isfinite(v)) return "non-finite parameter";
  }
  if (const auto* d = std::get_if<DriftHarmonicParams>(&spec)) {
    if (!(d->frequency > 0.0)) return "frequency must be positive";
    const double t_last = grid.time(grid.n_samples() - 1);
    if (!(1.0 + d->epsilon * t_last > 0.0)) return "drift envelope crosses zero on the grid";
    return std::nullopt;
  }
  if (const auto* s = std::get_if<SpmHarmonicParams>(&spec)) {
    return check_component(s->amplitude, s->frequency, s->mod_depth, s->mod_frequency);
  }
  const auto& p = std::get<DpmHarmonicParams>(spec);
  for (const auto& c : p.components) {
    if (auto why = check_component(c.amplitude, c.frequency, c.mod_depth, c.mod_frequency)) {
      return why;
    }
  }
  if (p.components[0].frequency == p.components[1].frequency) return "DPM carriers must differ";
  return std::nullopt;
}

std::vector<double> synth_drift_harmonic(const DriftHarmonicParams& p, const SamplingGrid& grid) {
  require_finite({p.epsilon, p.frequency, p.phase, p.trend}, "synth_drift_harmonic");
  grid.validate();
  std::vector<double> out(grid.n_samples());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = grid.time(k);
    out[k] = (1.0 + p.epsilon * t) * std::sin(kTwoPi * p.frequency * t + p.phase) + p.trend * t;
  }
  return out;
}

std::vector<double> synth_spm_harmonic(const SpmHarmonicParams& p, const SamplingGrid& grid) {
  require_finite({p.amplitude, p.frequency, p.mod_depth, p.mod_frequency, p.offset},
                 "synth_spm_harmonic");
  grid.validate();
  std::vector<double> out(grid.n_samples());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = grid.time(k);
    out[k] = p.amplitude *
                 std::sin(kTwoPi * p.frequency * t + p.mod_depth * std::sin(kTwoPi * p.mod_frequency * t)) +
             p.offset;
  }
  return out;
}

std::vector<double> synth_dpm_harmonic(const DpmHarmonicParams& p, const SamplingGrid& grid) {
  for (const auto& c : p.components) {
    require_finite({c.amplitude, c.frequency, c.mod_depth, c.mod_frequency}, "synth_dpm_harmonic");
  }
  require_finite({p.offset}, "synth_dpm_harmonic");
  grid.validate();
  std::vector<double> out(grid.n_samples());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = grid.time(k);
    double acc = 0.0;
    for (const auto& c : p.components) {
      acc += c.amplitude *
             std::sin(kTwoPi * c.frequency * t + c.mod_depth * std::sin(kTwoPi * c.mod_frequency * t));
    }
    out[k] = acc + p.offset;
  }
  return out;
}

std::vector<double> render(const SignalSpec& spec, const SamplingGrid& grid) {
  return std::visit(
      [&](const auto& p) -> std::vector<double> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DriftHarmonicParams>) {
          return synth_drift_harmonic(p, grid);
        } else if constexpr (std::is_same_v<T, SpmHarmonicParams>) {
          return synth_spm_harmonic(p, grid);
        } else {
          return synth_dpm_harmonic(p, grid);
        }
      },
      spec);
}

FamilyRanges FamilyRanges::defaults(Family family) {
  FamilyRanges r;
  r.frequency = family == Family::Drift ? Interval{0.85, 1.10} : Interval{0.68, 1.41};
  r.epsilon = {0.0, 5e-4};
  r.phase = {0.0, kTwoPi};
  r.trend = {-1e-3, 1e-3};
  r.amplitude = {0.5, 1.5};
  r.mod_depth = {0.1, 1.0};
  r.mod_frequency = {0.05, 0.2};
  r.offset = {-0.5, 0.5};
  return r;
}

void FamilyRanges::validate() const {
  const std::pair<const char*, const Interval*> fields[] = {
      {"frequency", &frequency}, {"epsilon", &epsilon},     {"phase", &phase},
      {"trend", &trend},         {"amplitude", &amplitude}, {"mod_depth", &mod_depth},
      {"mod_frequency", &mod_frequency}, {"offset", &offset}};
  for (const auto& [name, iv] : fields) {
    if (!std::isfinite(iv->lo) || !std::isfinite(iv->hi) || iv->lo > iv->hi) {
      std::ostringstream msg;
      msg << "range '" << name << "' is empty or non-finite: [" << iv->lo << ", " << iv->hi << "]";
      throw ConfigError(msg.str());
    }
  }
}

SignalSpec sample_spec(Family family, const FamilyRanges& ranges, std::uint64_t seed,
                       const SamplingGrid& grid) {
  ranges.validate();
  Engine engine = make_engine(seed);
  for (int attempt = 0; attempt < kMaxConstraintRedraws; ++attempt) {
    SignalSpec spec;
    bool ok = true;
    switch (family) {
      case Family::Drift: {
        DriftHarmonicParams p;
        p.epsilon = draw(engine, ranges.epsilon);
        p.frequency = draw(engine, ranges.frequency);
        p.phase = draw(engine, ranges.phase);
        p.trend = draw(engine, ranges.trend);
        spec = p;
        break;
      }
      case Family::Spm: {
        const PmComponent c = draw_component(engine, ranges);
        SpmHarmonicParams p{c.amplitude, c.frequency, c.mod_depth, c.mod_frequency, 0.0};
        p.offset = draw(engine, ranges.offset);
        ok = carrier_ok(p.frequency, p.mod_frequency);
        spec = p;
        break;
      }
      case Family::Dpm: {
        DpmHarmonicParams p;
        for (auto& c : p.components) {
          c = draw_component(engine, ranges);
          ok = ok && carrier_ok(c.frequency, c.mod_frequency);
        }
        p.offset = draw(engine, ranges.offset);
        spec = p;
        break;
      }
    }
    if (ok && !check_invariants(spec, grid)) return spec;
  }
  throw ConfigError("sample_spec: ranges for family '" + std::string(to_string(family)) +
                    "' cannot satisfy the family invariants");
}

std::vector<const SeriesRecord*> Dataset::split(Split which) const {
  std::vector<const SeriesRecord*> out;
  for (const auto& s : series) {
    if (s.split == which) out.push_back(&s);
  }
  return out;
}

std::uint64_t series_seed(std::uint64_t master_seed, std::size_t index, int attempt) {
  const std::uint64_t slot = derive_seed(master_seed, static_cast<std::uint64_t>(index));
  return attempt == 0 ? slot : derive_seed(slot, static_cast<std::uint64_t>(attempt));
}

Dataset build_dataset(Family family, const FamilyRanges& ranges, const SplitSizes& sizes,
                      std::uint64_t master_seed, const SamplingGrid& grid, std::string name) {
  grid.validate();
  ranges.validate();
  if (sizes.total() == 0) throw ConfigError("build_dataset: split sizes are all zero");
  if (name.empty()) name = std::string(to_string(family));

  Dataset ds;
  auto& m = ds.manifest;
  m.name = name;
  m.family = family;
  m.ranges = ranges;
  m.grid = grid;
  m.master_seed = master_seed;
  m.sizes = sizes;

  // Specs are drawn sequentially so collision redraws stay deterministic.
  std::map<std::vector<double>, std::uint64_t> seen;
  for (std::size_t i = 0; i < sizes.total(); ++i) {
    std::vector<std::uint64_t> tried;
    bool placed = false;
    for (int attempt = 0; attempt <= kMaxCollisionRedraws && !placed; ++attempt) {
      const std::uint64_t seed = series_seed(master_seed, i, attempt);
      SignalSpec spec = sample_spec(family, ranges, seed, grid);
      auto [it, inserted] = seen.emplace(parameter_tuple(spec), seed);
      if (!inserted) {
        tried.push_back(seed);
        tried.push_back(it->second);
        continue;
      }
      const Split split = i < sizes.train                      ? Split::Train
                          : i < sizes.train + sizes.validation ? Split::Validation
                                                               : Split::Test;
      char id[32];
      std::snprintf(id, sizeof id, "-%03zu", i);
      m.entries.push_back({name + id, split, std::move(spec), seed});
      placed = true;
    }
    if (!placed) {
      std::ostringstream msg;
      msg << "build_dataset: series " << i << " collides with an existing parameter tuple after "
          << kMaxCollisionRedraws << " redraws; colliding seeds:";
      for (std::size_t k = 0; k < tried.size() && k < 8; ++k) msg << ' ' << tried[k];
      throw GenerationError(msg.str());
    }
  }

  std::vector<SignalSpec> specs;
  specs.reserve(m.entries.size());
  for (const auto& e : m.entries) specs.push_back(e.spec);
  auto rendered = kernels::render_all(specs, grid);

  ds.series.reserve(m.entries.size());
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    ds.series.push_back({e.id, e.split, e.spec, e.seed, std::move(rendered[i]), {}});
  }
  return ds;
}

}  // namespace timesynth
