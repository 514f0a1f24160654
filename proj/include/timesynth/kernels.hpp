#pragma once

// Data-parallel kernels. Each OpenMP kernel has a serial twin with the same
// signature; results are identical element by element, and the serial form is
// what the tests and the benchmark compare against.

#include <span>
#include <vector>

#include "timesynth/metrics.hpp"
#include "timesynth/signal_gen.hpp"

namespace timesynth::kernels {

std::vector<std::vector<double>> render_all(std::span<const SignalSpec> specs, const SamplingGrid& grid);
std::vector<std::vector<double>> render_all_serial(std::span<const SignalSpec> specs,
                                                   const SamplingGrid& grid);

struct WindowView {
  std::span<const double> pred;
  std::span<const double> truth;
};

std::vector<metrics::WindowScore> score_windows(std::span<const WindowView> windows, double sample_rate_hz);
std::vector<metrics::WindowScore> score_windows_serial(std::span<const WindowView> windows,
                                                       double sample_rate_hz);

// Number of threads OpenMP regions will use.
int max_threads();

}  // namespace timesynth::kernels
