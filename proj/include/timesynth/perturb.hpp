#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "timesynth/signal_gen.hpp"

namespace timesynth {

struct NoiseSpec {
  double snr_db = 20.0;  // +inf means no noise
  std::uint64_t seed = 0;
};

// Adds i.i.d. N(0, var(x) / 10^(snr/10)) noise, var taken over the whole
// series with the mean removed. The input must be clean and non-constant.
SeriesRecord inject_noise(const SeriesRecord& series, const NoiseSpec& spec);

// Population variance (mean removed).
double signal_variance(std::span<const double> x);

// Noise variance that puts a signal of variance `signal_var` at `snr_db`.
double noise_variance(double signal_var, double snr_db);

enum class ShiftId { Shift1, Shift2, None, Shift3, Shift4 };

inline constexpr std::array<ShiftId, 5> kAllShifts{ShiftId::Shift1, ShiftId::Shift2, ShiftId::None,
                                                    ShiftId::Shift3, ShiftId::Shift4};

std::string_view to_string(ShiftId id);
ShiftId parse_shift(std::string_view name);

struct ShiftSpec {
  ShiftId id = ShiftId::None;
  Interval frequency;
};

// Frequency band for a shift column; `None` is the original training band.
Interval shift_interval(Family family, ShiftId id);

// Shift spec whose `None` band follows the supplied training ranges.
ShiftSpec make_shift_spec(Family family, ShiftId id, const FamilyRanges& training);

// Test-only dataset drawn from `training` with the frequency band replaced.
Dataset build_shifted_testset(Family family, const ShiftSpec& shift, const FamilyRanges& training,
                              std::size_t n_series, std::uint64_t master_seed,
                              const SamplingGrid& grid = {});

}  // namespace timesynth
