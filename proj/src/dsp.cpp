#include "timesynth/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "timesynth/error.hpp"

namespace timesynth::dsp {

namespace {

// Eigen's FFT (kissfft backend) handles any length through mixed radices.
// A plan cache lives in each object, so one per call keeps this thread-safe.
std::vector<Complex> transform(const std::vector<Complex>& data, bool inverse) {
  if (data.empty()) throw InvalidInput("fft: empty input");
  if (data.size() == 1) return data;  // kissfft does not handle n = 1
  Eigen::FFT<double> engine;
  std::vector<Complex> out;
  if (inverse) {
    engine.inv(out, data);
  } else {
    engine.fwd(out, data);
  }
  return out;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<Complex> fft(std::vector<Complex> data) { return transform(data, false); }

// Eigen scales the inverse by 1/n.
std::vector<Complex> ifft(std::vector<Complex> data) { return transform(data, true); }

Spectrum fft_spectrum(std::span<const double> samples, double sample_rate_hz, std::size_t n_fft) {
  if (samples.empty()) throw InvalidInput("fft_spectrum: empty input");
  if (!is_power_of_two(n_fft)) throw InvalidInput("fft_spectrum: n_fft must be a power of two");
  if (n_fft < samples.size()) throw InvalidInput("fft_spectrum: n_fft shorter than the input");
  if (!(sample_rate_hz > 0.0)) throw InvalidInput("fft_spectrum: sample rate must be positive");

  std::vector<Complex> buf(n_fft);
  std::copy(samples.begin(), samples.end(), buf.begin());
  buf = fft(std::move(buf));

  Spectrum s;
  s.sample_rate_hz = sample_rate_hz;
  s.n_fft = n_fft;
  const std::size_t bins = n_fft / 2 + 1;
  s.bins.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(bins));
  s.magnitudes.resize(bins);
  s.frequencies.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    s.magnitudes[k] = std::abs(s.bins[k]);
    s.frequencies[k] = static_cast<double>(k) * sample_rate_hz / static_cast<double>(n_fft);
  }
  return s;
}

double parabolic_offset(double left, double mid, double right) {
  const double denom = left - 2.0 * mid + right;
  if (denom == 0.0) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

double parabolic_peak(const Spectrum& spectrum) {
  const auto& m = spectrum.magnitudes;
  if (m.size() < 3) throw InvalidInput("parabolic_peak: need at least 3 bins");
  const std::size_t first = 1;
  const std::size_t last = m.size() - 2;  // n_fft/2 - 1
  std::size_t peak = first;
  for (std::size_t k = first + 1; k <= last; ++k) {
    if (m[k] > m[peak]) peak = k;
  }
  const double bin_hz = spectrum.sample_rate_hz / static_cast<double>(spectrum.n_fft);
  if (peak == first || peak == last) return static_cast<double>(peak) * bin_hz;
  const double delta = parabolic_offset(m[peak - 1], m[peak], m[peak + 1]);
  return (static_cast<double>(peak) + delta) * bin_hz;
}

double AnalyticSignal::magnitude(std::size_t k) const { return std::hypot(real[k], imag[k]); }

AnalyticSignal analytic_signal(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 4) throw InvalidInput("analytic_signal: need at least 4 samples");

  std::vector<Complex> spec(samples.begin(), samples.end());
  spec = fft(std::move(spec));
  // Bins 1 .. ceil(n/2)-1 doubled; Nyquist (even n) left alone; rest zeroed.
  const std::size_t half = n / 2;
  const std::size_t positive_end = (n % 2 == 0) ? half : half + 1;
  for (std::size_t k = 1; k < positive_end; ++k) spec[k] *= 2.0;
  for (std::size_t k = half + 1; k < n; ++k) spec[k] = 0.0;
  const auto z = ifft(std::move(spec));

  AnalyticSignal out;
  out.real.assign(samples.begin(), samples.end());
  out.imag.resize(n);
  out.phase.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.imag[k] = z[k].imag();
    out.phase[k] = std::atan2(out.imag[k], out.real[k]);
  }
  return out;
}

std::vector<double> moving_average(std::span<const double> samples, std::size_t kernel_size) {
  if (kernel_size == 0 || kernel_size % 2 == 0) {
    throw InvalidInput("moving_average: kernel size must be odd and positive");
  }
  if (kernel_size > samples.size()) {
    throw InvalidInput("moving_average: kernel longer than the input");
  }
  const std::size_t n = samples.size();
  const auto half = static_cast<std::ptrdiff_t>(kernel_size / 2);
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t j = -half; j <= half; ++j) {
      acc += samples[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(i) + j, 0, last))];
    }
    out[i] = acc / static_cast<double>(kernel_size);
  }
  return out;
}

}  // namespace timesynth::dsp
