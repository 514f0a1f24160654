#include "timesynth/windows.hpp"

#include <string>

#include "timesynth/error.hpp"

namespace timesynth {

void WindowingPolicy::validate(std::size_t series_length) const {
  if (history == 0 || horizon == 0) throw ConfigError("windowing: history and horizon must be positive");
  if (train_stride == 0 || eval_stride == 0) throw ConfigError("windowing: strides must be at least 1");
  if (history + horizon > series_length) {
    throw ConfigError("windowing: history + horizon (" + std::to_string(history + horizon) +
                      ") exceeds the series length " + std::to_string(series_length));
  }
}

std::size_t window_count(std::size_t length, std::size_t history, std::size_t horizon, std::size_t stride) {
  if (stride == 0 || length < history + horizon) return 0;
  return (length - history - horizon) / stride + 1;
}

std::vector<WindowPair> make_windows(std::span<const double> series, std::size_t history,
                                     std::size_t horizon, std::size_t stride) {
  if (stride == 0) throw InvalidInput("make_windows: stride must be at least 1");
  if (history == 0 || horizon == 0) throw InvalidInput("make_windows: empty history or horizon");
  if (series.size() < history + horizon) {
    throw InvalidInput("make_windows: series of length " + std::to_string(series.size()) +
                       " is shorter than history + horizon = " + std::to_string(history + horizon));
  }
  const std::size_t n = window_count(series.size(), history, horizon, stride);
  std::vector<WindowPair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = i * stride;
    out.push_back({series.subspan(start, history), series.subspan(start + history, horizon)});
  }
  return out;
}

}  // namespace timesynth
