#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace timesynth {

// History/future pair viewing into a series owned elsewhere.
struct WindowPair {
  std::span<const double> history;
  std::span<const double> future;
};

struct WindowingPolicy {
  std::size_t history = 50;
  std::size_t horizon = 100;
  std::size_t train_stride = 1;
  std::size_t eval_stride = 25;

  void validate(std::size_t series_length) const;
};

// floor((length - history - horizon) / stride) + 1, or 0 if the series is too short.
std::size_t window_count(std::size_t length, std::size_t history, std::size_t horizon, std::size_t stride);

// Windows start at offsets 0, stride, 2 stride, ...; the views stay valid as
// long as `series` does.
std::vector<WindowPair> make_windows(std::span<const double> series, std::size_t history,
                                     std::size_t horizon, std::size_t stride);

}  // namespace timesynth
