#pragma once

// Test-only reference computations, written independently of the library.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace oracles {

inline constexpr double kPi = std::numbers::pi;

// O(n^2) DFT straight from the definition.
inline std::vector<std::complex<double>> direct_dft(std::span<const std::complex<double>> x, bool inverse = false) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<long double> acc = 0.0L;
    for (std::size_t t = 0; t < n; ++t) {
      const long double angle = sign * 2.0L * static_cast<long double>(kPi) *
                                static_cast<long double>((k * t) % n) / static_cast<long double>(n);
      acc += std::complex<long double>(x[t].real(), x[t].imag()) *
             std::complex<long double>(std::cos(angle), std::sin(angle));
    }
    out[k] = {static_cast<double>(acc.real()), static_cast<double>(acc.imag())};
  }
  return out;
}

inline std::vector<double> tone(std::size_t n, double freq_hz, double fs, double phase = 0.0, double amp = 1.0) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = amp * std::sin(2.0 * kPi * freq_hz * static_cast<double>(k) / fs + phase);
  return out;
}

inline double mean(std::span<const double> x) {
  long double acc = 0.0L;
  for (double v : x) acc += v;
  return static_cast<double>(acc / static_cast<long double>(x.size()));
}

inline double variance(std::span<const double> x) {
  const double mu = mean(x);
  long double acc = 0.0L;
  for (double v : x) acc += (v - mu) * (v - mu);
  return static_cast<double>(acc / static_cast<long double>(x.size()));
}

// Central finite-difference gradient of f at p.
inline std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& f,
                                             std::vector<double> p, double h) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + h;
    const double up = f(p);
    p[i] = saved - h;
    const double down = f(p);
    p[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// |a - b| <= rel * max(|a|, |b|) + abs_floor
inline bool close_rel(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

}  // namespace oracles
