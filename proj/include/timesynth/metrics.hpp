#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "timesynth/dsp.hpp"

namespace timesynth::metrics {

struct WindowScore {
  double mae = 0.0;
  double mse = 0.0;
  double freq_err_hz = 0.0;
  double phase_err_deg = 0.0;
};

struct SeriesScore {
  std::vector<WindowScore> windows;
  WindowScore mean;  // unweighted mean over windows

  std::size_t window_count() const { return windows.size(); }
};

struct Summary {
  double mean = 0.0;
  double median = 0.0;
};

struct AggregateScore {
  Summary mae;
  Summary mse;
  Summary freq_err_hz;
  Summary phase_err_deg;
  std::size_t series_count = 0;
};

struct AmplitudeErrors {
  double mae = 0.0;
  double mse = 0.0;
};

inline constexpr std::size_t kMinSpectralLength = 16;

AmplitudeErrors amplitude_errors(std::span<const double> pred, std::span<const double> truth);

// |peak(pred) - peak(truth)| in Hz; both inputs are mean-removed first.
double frequency_error(std::span<const double> pred, std::span<const double> truth,
                       double sample_rate_hz, std::size_t n_fft = dsp::kDefaultFftSize);

// Mean absolute instantaneous-phase difference in degrees, each per-sample
// difference wrapped to (-180, 180]. Inputs are mean-removed before the
// Hilbert transform.
double phase_error(std::span<const double> pred, std::span<const double> truth);

// Wraps an angle in degrees to (-180, 180].
double wrap_degrees(double deg);

WindowScore score_window(std::span<const double> pred, std::span<const double> truth,
                         double sample_rate_hz, std::size_t n_fft = dsp::kDefaultFftSize);

SeriesScore summarize_series(std::vector<WindowScore> windows);

double median(std::vector<double> values);
Summary summarize(std::span<const double> values);

AggregateScore aggregate(std::span<const SeriesScore> series);

}  // namespace timesynth::metrics
