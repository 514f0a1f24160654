#include "timesynth/perturb.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "timesynth/error.hpp"
#include "timesynth/rng.hpp"

namespace timesynth {

double signal_variance(std::span<const double> x) {
  if (x.empty()) throw InvalidInput("signal_variance: empty series");
  const double mu = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += (v - mu) * (v - mu);
  return acc / static_cast<double>(x.size());
}

double noise_variance(double signal_var, double snr_db) {
  return signal_var / std::pow(10.0, snr_db / 10.0);
}

SeriesRecord inject_noise(const SeriesRecord& series, const NoiseSpec& spec) {
  if (!series.perturbation.clean()) {
    throw InvalidInput("inject_noise: series '" + series.id + "' is already perturbed (" +
                       series.perturbation.kind + ")");
  }
  if (std::isnan(spec.snr_db) || spec.snr_db == -INFINITY) {
    throw InvalidInput("inject_noise: SNR must be a number above -inf");
  }
  const double var = signal_variance(series.values);
  if (!(var > 0.0)) throw InvalidInput("inject_noise: zero-variance series, SNR undefined");

  const double noise_var = noise_variance(var, spec.snr_db);
  const double sigma = std::sqrt(noise_var);

  SeriesRecord out = series;
  out.perturbation = {"noise", spec.snr_db, {}, spec.seed};
  Engine engine = make_engine(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out.values) v += sigma * normal(engine);
  return out;
}

std::string_view to_string(ShiftId id) {
  switch (id) {
    case ShiftId::Shift1: return "shift1";
    case ShiftId::Shift2: return "shift2";
    case ShiftId::None: return "none";
    case ShiftId::Shift3: return "shift3";
    case ShiftId::Shift4: return "shift4";
  }
  return "?";
}

ShiftId parse_shift(std::string_view name) {
  for (ShiftId id : kAllShifts) {
    if (name == to_string(id)) return id;
  }
  throw ConfigError("unknown shift id '" + std::string(name) +
                    "' (expected shift1, shift2, none, shift3, shift4)");
}

Interval shift_interval(Family family, ShiftId id) {
  // Columns: shift1, shift2, original, shift3, shift4.
  static constexpr Interval kDrift[] = {{0.35, 0.60}, {0.60, 0.85}, {0.85, 1.10}, {1.10, 1.35}, {1.35, 1.60}};
  static constexpr Interval kModulated[] = {{0.00, 0.34}, {0.34, 0.68}, {0.68, 1.41}, {1.41, 2.14}, {2.14, 2.88}};
  const auto column = static_cast<std::size_t>(id);
  return family == Family::Drift ? kDrift[column] : kModulated[column];
}

ShiftSpec make_shift_spec(Family family, ShiftId id, const FamilyRanges& training) {
  return {id, id == ShiftId::None ? training.frequency : shift_interval(family, id)};
}

Dataset build_shifted_testset(Family family, const ShiftSpec& shift, const FamilyRanges& training,
                              std::size_t n_series, std::uint64_t master_seed, const SamplingGrid& grid) {
  if (n_series == 0) throw ConfigError("build_shifted_testset: n_series must be positive");
  if (!(shift.frequency.lo <= shift.frequency.hi)) {
    throw ConfigError("build_shifted_testset: invalid frequency interval for " +
                      std::string(to_string(shift.id)));
  }
  FamilyRanges ranges = training;
  ranges.frequency = shift.frequency;
  const std::string name = std::string(to_string(family)) + "-" + std::string(to_string(shift.id));
  Dataset ds = build_dataset(family, ranges, {0, 0, n_series}, master_seed, grid, name);
  ds.manifest.perturbation = {"shift", 0.0, std::string(to_string(shift.id)), master_seed};
  for (auto& s : ds.series) s.perturbation = ds.manifest.perturbation;
  return ds;
}

}  // namespace timesynth
