#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace timesynth::dsp {

using Complex = std::complex<double>;

// Discrete Fourier transform of any length. The inverse is normalized by 1/n.
std::vector<Complex> fft(std::vector<Complex> data);
std::vector<Complex> ifft(std::vector<Complex> data);

bool is_power_of_two(std::size_t n);

inline constexpr std::size_t kDefaultFftSize = 4096;

// One-sided spectrum of a zero-padded real sequence.
struct Spectrum {
  std::vector<Complex> bins;        // k = 0 .. n_fft/2
  std::vector<double> magnitudes;   // |bins[k]|
  std::vector<double> frequencies;  // k * fs / n_fft
  double sample_rate_hz = 0.0;
  std::size_t n_fft = 0;
};

Spectrum fft_spectrum(std::span<const double> samples, double sample_rate_hz,
                      std::size_t n_fft = kDefaultFftSize);

// Peak frequency in Hz refined by a three-point parabola on linear magnitudes.
// The search skips DC; a peak on the first or last searched bin is returned
// at its bin center.
double parabolic_peak(const Spectrum& spectrum);

// Sub-bin offset of the vertex of the parabola through (-1, left), (0, mid),
// (1, right), clamped to [-0.5, 0.5]. Zero for a flat triple.
double parabolic_offset(double left, double mid, double right);

struct AnalyticSignal {
  std::vector<double> real;
  std::vector<double> imag;
  std::vector<double> phase;  // atan2(imag, real), in (-pi, pi]

  double magnitude(std::size_t k) const;
};

// FFT-based analytic signal: negative frequencies zeroed, strictly positive
// ones doubled, DC (and Nyquist for even lengths) kept at unit weight.
AnalyticSignal analytic_signal(std::span<const double> samples);

// Centered moving average with edge replication; kernel_size must be odd.
std::vector<double> moving_average(std::span<const double> samples, std::size_t kernel_size);

}  // namespace timesynth::dsp
