#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace timesynth {

// Uniform sampling grid. Defaults give 3000 samples at 10 Hz.
struct SamplingGrid {
  double sample_rate_hz = 10.0;
  double duration_s = 300.0;

  std::size_t n_samples() const;
  double time(std::size_t k) const { return static_cast<double>(k) / sample_rate_hz; }
  void validate() const;
};

enum class Family { Drift, Spm, Dpm };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);
inline constexpr std::array<Family, 3> kAllFamilies{Family::Drift, Family::Spm, Family::Dpm};

// (1 + epsilon t) sin(2 pi f t + phase) + trend t
struct DriftHarmonicParams {
  double epsilon = 0.0;    // 1/s
  double frequency = 1.0;  // Hz
  double phase = 0.0;      // rad
  double trend = 0.0;      // units/s
};

// amplitude sin(2 pi f t + depth sin(2 pi f_mod t)) + offset
struct SpmHarmonicParams {
  double amplitude = 1.0;
  double frequency = 1.0;
  double mod_depth = 0.0;
  double mod_frequency = 0.1;
  double offset = 0.0;
};

struct PmComponent {
  double amplitude = 1.0;
  double frequency = 1.0;
  double mod_depth = 0.0;
  double mod_frequency = 0.1;
};

struct DpmHarmonicParams {
  std::array<PmComponent, 2> components{};
  double offset = 0.0;
};

using SignalSpec = std::variant<DriftHarmonicParams, SpmHarmonicParams, DpmHarmonicParams>;

Family family_of(const SignalSpec& spec);

// Flattened parameter tuple; used for split-disjointness checks and serialization.
std::vector<double> parameter_tuple(const SignalSpec& spec);

// Structural invariants from the family definitions (positive carriers,
// f_mod < f, distinct DPM carriers, non-vanishing drift envelope on the grid).
// Returns a description of the first violation, or nullopt.
std::optional<std::string> check_invariants(const SignalSpec& spec, const SamplingGrid& grid);

// Closed-form renderers. Only non-finite parameters are rejected here; the
// degenerate cases (zero amplitude, equal carriers) are legal to evaluate.
std::vector<double> synth_drift_harmonic(const DriftHarmonicParams& params, const SamplingGrid& grid);
std::vector<double> synth_spm_harmonic(const SpmHarmonicParams& params, const SamplingGrid& grid);
std::vector<double> synth_dpm_harmonic(const DpmHarmonicParams& params, const SamplingGrid& grid);
std::vector<double> render(const SignalSpec& spec, const SamplingGrid& grid);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const Interval&) const = default;
};

// Per-parameter sampling intervals for one family. Fields that a family does
// not use are ignored. DPM draws both carriers from `frequency` and both
// component tuples from the same amplitude/depth/f_mod intervals.
struct FamilyRanges {
  Interval frequency;
  Interval epsilon;
  Interval phase;
  Interval trend;
  Interval amplitude;
  Interval mod_depth;
  Interval mod_frequency;
  Interval offset;

  static FamilyRanges defaults(Family family);
  void validate() const;
  bool operator==(const FamilyRanges&) const = default;
};

// Lowest carrier frequency accepted for phase-modulated families.
inline constexpr double kMinCarrierHz = 0.01;
inline constexpr int kMaxConstraintRedraws = 1000;
inline constexpr int kMaxCollisionRedraws = 100;

// Draws one spec, each parameter i.i.d. uniform over its interval. Draws that
// violate a family invariant are redrawn from the same stream.
SignalSpec sample_spec(Family family, const FamilyRanges& ranges, std::uint64_t seed,
                       const SamplingGrid& grid = {});

enum class Split { Train, Validation, Test };
std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct SplitSizes {
  std::size_t train = 70;
  std::size_t validation = 10;
  std::size_t test = 20;

  std::size_t total() const { return train + validation + test; }
  bool operator==(const SplitSizes&) const = default;
};

// Dataset- or series-level perturbation label. Empty kind means clean.
struct Perturbation {
  std::string kind;  // "", "noise" or "shift"
  double snr_db = 0.0;
  std::string shift_id;
  std::uint64_t seed = 0;

  bool clean() const { return kind.empty(); }
  bool operator==(const Perturbation&) const = default;
};

struct ManifestEntry {
  std::string id;
  Split split = Split::Train;
  SignalSpec spec;
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  std::string name;
  Family family = Family::Drift;
  FamilyRanges ranges;
  SamplingGrid grid;
  std::uint64_t master_seed = 0;
  SplitSizes sizes;
  std::vector<ManifestEntry> entries;
  Perturbation perturbation;
};

struct SeriesRecord {
  std::string id;
  Split split = Split::Train;
  SignalSpec spec;
  std::uint64_t seed = 0;
  std::vector<double> values;
  Perturbation perturbation;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<SeriesRecord> series;

  std::vector<const SeriesRecord*> split(Split which) const;
};

// Per-series seed for slot `index`, redraw `attempt`.
std::uint64_t series_seed(std::uint64_t master_seed, std::size_t index, int attempt = 0);

// Samples split_sizes.total() specs with distinct parameter tuples, renders
// them, and labels them train/validation/test in index order.
Dataset build_dataset(Family family, const FamilyRanges& ranges, const SplitSizes& sizes,
                      std::uint64_t master_seed, const SamplingGrid& grid = {},
                      std::string name = {});

}  // namespace timesynth
