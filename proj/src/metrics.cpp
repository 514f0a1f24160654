#include "timesynth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "timesynth/error.hpp"

namespace timesynth::metrics {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth, std::size_t min_len,
                const char* what) {
  if (pred.size() != truth.size()) {
    throw InvalidInput(std::string(what) + ": prediction and truth lengths differ (" +
                       std::to_string(pred.size()) + " vs " + std::to_string(truth.size()) + ")");
  }
  if (pred.size() < min_len) {
    throw InvalidInput(std::string(what) + ": need at least " + std::to_string(min_len) + " samples");
  }
}

std::vector<double> demean(std::span<const double> x) {
  const double mu = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [mu](double v) { return v - mu; });
  return out;
}

}  // namespace

AmplitudeErrors amplitude_errors(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 1, "amplitude_errors");
  AmplitudeErrors e;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    e.mae += std::abs(d);
    e.mse += d * d;
  }
  const auto n = static_cast<double>(pred.size());
  e.mae /= n;
  e.mse /= n;
  return e;
}

double frequency_error(std::span<const double> pred, std::span<const double> truth,
                       double sample_rate_hz, std::size_t n_fft) {
  check_pair(pred, truth, kMinSpectralLength, "frequency_error");
  const auto p = demean(pred);
  const auto t = demean(truth);
  const double fp = dsp::parabolic_peak(dsp::fft_spectrum(p, sample_rate_hz, n_fft));
  const double ft = dsp::parabolic_peak(dsp::fft_spectrum(t, sample_rate_hz, n_fft));
  return std::abs(fp - ft);
}

double wrap_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r <= -180.0) r += 360.0;
  if (r > 180.0) r -= 360.0;
  return r;
}

double phase_error(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, kMinSpectralLength, "phase_error");
  const auto zp = dsp::analytic_signal(demean(pred));
  const auto zt = dsp::analytic_signal(demean(truth));
  constexpr double kDeg = 180.0 / std::numbers::pi;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    acc += std::abs(wrap_degrees((zp.phase[i] - zt.phase[i]) * kDeg));
  }
  return acc / static_cast<double>(pred.size());
}

WindowScore score_window(std::span<const double> pred, std::span<const double> truth,
                         double sample_rate_hz, std::size_t n_fft) {
  const auto amp = amplitude_errors(pred, truth);
  return {amp.mae, amp.mse, frequency_error(pred, truth, sample_rate_hz, n_fft), phase_error(pred, truth)};
}

SeriesScore summarize_series(std::vector<WindowScore> windows) {
  if (windows.empty()) throw InvalidInput("summarize_series: no windows");
  SeriesScore s;
  for (const auto& w : windows) {
    s.mean.mae += w.mae;
    s.mean.mse += w.mse;
    s.mean.freq_err_hz += w.freq_err_hz;
    s.mean.phase_err_deg += w.phase_err_deg;
  }
  const auto n = static_cast<double>(windows.size());
  s.mean.mae /= n;
  s.mean.mse /= n;
  s.mean.freq_err_hz /= n;
  s.mean.phase_err_deg /= n;
  s.windows = std::move(windows);
  return s;
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("summarize: empty input");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return {mean, median({values.begin(), values.end()})};
}

AggregateScore aggregate(std::span<const SeriesScore> series) {
  if (series.empty()) throw InvalidInput("aggregate: no series");
  auto column = [&](auto member) {
    std::vector<double> v;
    v.reserve(series.size());
    for (const auto& s : series) v.push_back(s.mean.*member);
    return summarize(v);
  };
  AggregateScore a;
  a.mae = column(&WindowScore::mae);
  a.mse = column(&WindowScore::mse);
  a.freq_err_hz = column(&WindowScore::freq_err_hz);
  a.phase_err_deg = column(&WindowScore::phase_err_deg);
  a.series_count = series.size();
  return a;
}

}  // namespace timesynth::metrics
