#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "oracles.hpp"
#include "timesynth/error.hpp"
#include "timesynth/rng.hpp"
#include "timesynth/signal_gen.hpp"

using namespace timesynth;

namespace {

FamilyRanges point_ranges(Family family) {
  FamilyRanges r = FamilyRanges::defaults(family);
  r.frequency = {1.0, 1.0};
  r.epsilon = {2e-4, 2e-4};
  r.phase = {0.5, 0.5};
  r.trend = {1e-4, 1e-4};
  r.amplitude = {0.8, 0.8};
  r.mod_depth = {0.3, 0.3};
  r.mod_frequency = {0.1, 0.1};
  r.offset = {0.2, 0.2};
  return r;
}

// Scalar closed forms, long double.
long double drift_at(const DriftHarmonicParams& p, long double t) {
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  return (1.0L + p.epsilon * t) * std::sin(two_pi * p.frequency * t + p.phase) + p.trend * t;
}

long double pm_at(double a, double f, double beta, double fmod, long double t) {
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  return a * std::sin(two_pi * f * t + beta * std::sin(two_pi * fmod * t));
}

}  // namespace

TEST_CASE("sampling grid defaults") {
  SamplingGrid g;
  CHECK(g.n_samples() == 3000);
  CHECK(g.time(0) == 0.0);
  CHECK(g.time(2999) == doctest::Approx(299.9));
  for (std::size_t k = 1; k < g.n_samples(); ++k) REQUIRE(g.time(k) > g.time(k - 1));
}

TEST_CASE("drift harmonic examples") {
  SamplingGrid g;
  SUBCASE("pure sinusoid at t = 0.25 s") {
    const auto x = synth_drift_harmonic({0.0, 1.0, 0.0, 0.0}, g);
    CHECK(x.size() == 3000);
    CHECK(x[2] == doctest::Approx(std::sin(2.0 * oracles::kPi * 0.2)));
    // t = 0.25 s is not on the 10 Hz grid; evaluate on a 100 Hz grid instead.
    const auto fine = synth_drift_harmonic({0.0, 1.0, 0.0, 0.0}, SamplingGrid{100.0, 1.0});
    CHECK(fine[25] == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("trend contribution at the last sample") {
    const auto with = synth_drift_harmonic({0.0, 1.0, 0.0, 0.001}, g);
    const auto without = synth_drift_harmonic({0.0, 1.0, 0.0, 0.0}, g);
    // a * t_last = 0.001 * 299.9
    CHECK(with.back() - without.back() == doctest::Approx(0.2999).epsilon(1e-12));
  }
  SUBCASE("cos start") {
    const auto x = synth_drift_harmonic({0.0005, 0.85, std::numbers::pi / 2, 0.0}, g);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("non-finite rejected") {
    CHECK_THROWS_AS(synth_drift_harmonic({NAN, 1.0, 0.0, 0.0}, g), InvalidInput);
    CHECK_THROWS_AS(synth_drift_harmonic({0.0, INFINITY, 0.0, 0.0}, g), InvalidInput);
  }
}

TEST_CASE("spm harmonic examples") {
  SamplingGrid g;
  SUBCASE("zero depth reduces to a plain sinusoid") {
    const auto x = synth_spm_harmonic({1.3, 0.9, 0.0, 0.1, -0.2}, g);
    for (std::size_t k = 0; k < x.size(); ++k) {
      REQUIRE(x[k] == 1.3 * std::sin(2.0 * oracles::kPi * 0.9 * g.time(k)) - 0.2);
    }
  }
  SUBCASE("value at t = 5 s") {
    const auto x = synth_spm_harmonic({1.0, 1.0, 0.5, 0.1, 0.0}, g);
    CHECK(x[50] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(x[50]) < 1e-12);
  }
  SUBCASE("offset is the mean over whole periods") {
    const auto x = synth_spm_harmonic({1.0, 1.0, 0.0, 0.1, 0.3}, g);
    CHECK(oracles::mean(x) == doctest::Approx(0.3).epsilon(1e-12));
  }
  CHECK_THROWS_AS(synth_spm_harmonic({1.0, 1.0, NAN, 0.1, 0.0}, g), InvalidInput);
}

TEST_CASE("dpm harmonic examples") {
  SamplingGrid g;
  SUBCASE("vanishing second component equals spm") {
    DpmHarmonicParams p;
    p.components[0] = {1.1, 0.9, 0.4, 0.12};
    p.components[1] = {0.0, 1.3, 0.7, 0.08};
    p.offset = 0.25;
    const auto dpm = synth_dpm_harmonic(p, g);
    const auto spm = synth_spm_harmonic({1.1, 0.9, 0.4, 0.12, 0.25}, g);
    for (std::size_t k = 0; k < dpm.size(); ++k) REQUIRE(std::abs(dpm[k] - spm[k]) < 1e-14);
  }
  SUBCASE("peak bounded by the amplitude sum") {
    DpmHarmonicParams p;
    p.components[0] = {1.0, 1.0, 0.0, 0.1};
    p.components[1] = {1.0, 1.5, 0.0, 0.1};
    for (double v : synth_dpm_harmonic(p, g)) REQUIRE(std::abs(v) <= 2.0);
  }
  SUBCASE("equal carriers superpose") {
    DpmHarmonicParams p;
    p.components[0] = {1.0, 1.0, 0.0, 0.1};
    p.components[1] = {1.0, 1.0, 0.0, 0.1};
    const auto x = synth_dpm_harmonic(p, g);
    for (std::size_t k = 0; k < x.size(); ++k) {
      REQUIRE(x[k] == doctest::Approx(2.0 * std::sin(2.0 * oracles::kPi * g.time(k))).epsilon(1e-12));
    }
  }
}

TEST_CASE("closed-form agreement with scalar evaluation") {
  SamplingGrid g;
  Engine engine = make_engine(99);
  for (Family family : kAllFamilies) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto spec = sample_spec(family, FamilyRanges::defaults(family), engine());
      const auto x = render(spec, g);
      const std::size_t k = engine() % g.n_samples();
      const long double t = static_cast<long double>(k) / 10.0L;
      long double expected = 0.0L;
      if (const auto* d = std::get_if<DriftHarmonicParams>(&spec)) {
        expected = drift_at(*d, t);
      } else if (const auto* s = std::get_if<SpmHarmonicParams>(&spec)) {
        expected = pm_at(s->amplitude, s->frequency, s->mod_depth, s->mod_frequency, t) + s->offset;
      } else {
        const auto& p = std::get<DpmHarmonicParams>(spec);
        for (const auto& c : p.components) expected += pm_at(c.amplitude, c.frequency, c.mod_depth, c.mod_frequency, t);
        expected += p.offset;
      }
      // Relative to the series scale; phases reach ~2e3 rad so the argument
      // rounding alone contributes ~1e-13.
      REQUIRE(std::abs(x[k] - static_cast<double>(expected)) <= 1e-12 * std::max(1.0, std::abs(x[k])));
    }
  }
}

TEST_CASE("sample_spec") {
  SUBCASE("point intervals reproduce the constants") {
    const auto spec = sample_spec(Family::Spm, point_ranges(Family::Spm), 5);
    const auto& p = std::get<SpmHarmonicParams>(spec);
    CHECK(p.amplitude == 0.8);
    CHECK(p.frequency == 1.0);
    CHECK(p.mod_depth == 0.3);
    CHECK(p.mod_frequency == 0.1);
    CHECK(p.offset == 0.2);
    const auto d = std::get<DriftHarmonicParams>(sample_spec(Family::Drift, point_ranges(Family::Drift), 5));
    CHECK(d.epsilon == 2e-4);
    CHECK(d.phase == 0.5);
    CHECK(d.trend == 1e-4);
  }
  SUBCASE("deterministic per seed") {
    for (Family family : kAllFamilies) {
      const auto r = FamilyRanges::defaults(family);
      CHECK(parameter_tuple(sample_spec(family, r, 1234)) == parameter_tuple(sample_spec(family, r, 1234)));
      CHECK(parameter_tuple(sample_spec(family, r, 1234)) != parameter_tuple(sample_spec(family, r, 1235)));
    }
  }
  SUBCASE("uniform mean of the drift frequency") {
    const auto r = FamilyRanges::defaults(Family::Drift);
    double acc = 0.0;
    for (std::uint64_t s = 0; s < 10000; ++s) {
      acc += std::get<DriftHarmonicParams>(sample_spec(Family::Drift, r, derive_seed(7, s))).frequency;
    }
    CHECK(std::abs(acc / 10000.0 - 0.975) < 0.005);
  }
  SUBCASE("empty interval is a configuration error") {
    auto r = FamilyRanges::defaults(Family::Spm);
    r.amplitude = {1.0, 0.5};
    CHECK_THROWS_AS(sample_spec(Family::Spm, r, 1), ConfigError);
  }
  SUBCASE("unsatisfiable constraints are a configuration error") {
    auto r = point_ranges(Family::Spm);
    r.frequency = {0.05, 0.05};  // below f_mod = 0.1
    CHECK_THROWS_AS(sample_spec(Family::Spm, r, 1), ConfigError);
  }
}

TEST_CASE("range fidelity over random configurations") {
  Engine engine = make_engine(4242);
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(engine() >> 11) * 0x1.0p-53); };
  for (int trial = 0; trial < 200; ++trial) {
    const Family family = kAllFamilies[engine() % 3];
    FamilyRanges r = FamilyRanges::defaults(family);
    auto rand_iv = [&](double lo, double hi) {
      const double a = u(lo, hi), b = u(lo, hi);
      return Interval{std::min(a, b), std::max(a, b)};
    };
    r.frequency = rand_iv(0.3, 3.0);
    r.epsilon = rand_iv(0.0, 1e-3);
    r.phase = rand_iv(0.0, 6.0);
    r.trend = rand_iv(-1e-2, 1e-2);
    r.amplitude = rand_iv(0.1, 2.0);
    r.mod_depth = rand_iv(0.0, 2.0);
    r.mod_frequency = rand_iv(0.01, 0.25);
    r.offset = rand_iv(-1.0, 1.0);
    const auto spec = sample_spec(family, r, engine());
    if (const auto* d = std::get_if<DriftHarmonicParams>(&spec)) {
      REQUIRE(r.epsilon.contains(d->epsilon));
      REQUIRE(r.frequency.contains(d->frequency));
      REQUIRE(r.phase.contains(d->phase));
      REQUIRE(r.trend.contains(d->trend));
    } else {
      std::vector<PmComponent> comps;
      double offset = 0.0;
      if (const auto* s = std::get_if<SpmHarmonicParams>(&spec)) {
        comps.push_back({s->amplitude, s->frequency, s->mod_depth, s->mod_frequency});
        offset = s->offset;
      } else {
        const auto& p = std::get<DpmHarmonicParams>(spec);
        comps.assign(p.components.begin(), p.components.end());
        offset = p.offset;
      }
      REQUIRE(r.offset.contains(offset));
      for (const auto& c : comps) {
        REQUIRE(r.amplitude.contains(c.amplitude));
        REQUIRE(r.frequency.contains(c.frequency));
        REQUIRE(r.mod_depth.contains(c.mod_depth));
        REQUIRE(r.mod_frequency.contains(c.mod_frequency));
        REQUIRE(c.frequency > c.mod_frequency);
      }
    }
  }
}

TEST_CASE("build_dataset") {
  SUBCASE("default split sizes") {
    const auto ds = build_dataset(Family::Dpm, FamilyRanges::defaults(Family::Dpm), {}, 11);
    CHECK(ds.series.size() == 100);
    CHECK(ds.split(Split::Train).size() == 70);
    CHECK(ds.split(Split::Validation).size() == 10);
    CHECK(ds.split(Split::Test).size() == 20);
    for (const auto& s : ds.series) REQUIRE(s.values.size() == 3000);
    // Order: train, then validation, then test.
    CHECK(ds.series[69].split == Split::Train);
    CHECK(ds.series[70].split == Split::Validation);
    CHECK(ds.series[80].split == Split::Test);
  }
  SUBCASE("split disjointness") {
    for (Family family : kAllFamilies) {
      const auto ds = build_dataset(family, FamilyRanges::defaults(family), {}, 3);
      std::set<std::vector<double>> tuples;
      for (const auto& e : ds.manifest.entries) REQUIRE(tuples.insert(parameter_tuple(e.spec)).second);
    }
  }
  SUBCASE("forced collision with point intervals") {
    CHECK_THROWS_AS(build_dataset(Family::Spm, point_ranges(Family::Spm), {1, 1, 1}, 3), GenerationError);
  }
  SUBCASE("different master seeds give disjoint per-series seeds") {
    const auto a = build_dataset(Family::Drift, FamilyRanges::defaults(Family::Drift), {}, 100);
    const auto b = build_dataset(Family::Drift, FamilyRanges::defaults(Family::Drift), {}, 101);
    std::set<std::uint64_t> seeds;
    for (const auto& e : a.manifest.entries) seeds.insert(e.seed);
    CHECK(seeds.size() == 100);
    for (const auto& e : b.manifest.entries) CHECK(seeds.count(e.seed) == 0);
  }
  SUBCASE("bit-identical reruns") {
    const auto a = build_dataset(Family::Spm, FamilyRanges::defaults(Family::Spm), {5, 2, 3}, 9);
    const auto b = build_dataset(Family::Spm, FamilyRanges::defaults(Family::Spm), {5, 2, 3}, 9);
    REQUIRE(a.series.size() == b.series.size());
    for (std::size_t i = 0; i < a.series.size(); ++i) {
      CHECK(a.series[i].values == b.series[i].values);
      CHECK(a.series[i].seed == b.series[i].seed);
    }
  }
  SUBCASE("adding series keeps existing ones") {
    const auto small = build_dataset(Family::Drift, FamilyRanges::defaults(Family::Drift), {3, 0, 0}, 21);
    const auto large = build_dataset(Family::Drift, FamilyRanges::defaults(Family::Drift), {6, 0, 0}, 21);
    for (std::size_t i = 0; i < 3; ++i) CHECK(small.series[i].values == large.series[i].values);
  }
}
