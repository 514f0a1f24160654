#include "timesynth/kernels.hpp"

#include <exception>

#include <omp.h>

namespace timesynth::kernels {

namespace {

// Exceptions cannot leave an OpenMP region; capture the first and rethrow.
class FirstError {
 public:
  template <class F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
#pragma omp critical(timesynth_first_error)
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

}  // namespace

std::vector<std::vector<double>> render_all(std::span<const SignalSpec> specs, const SamplingGrid& grid) {
  std::vector<std::vector<double>> out(specs.size());
  FirstError err;
  const auto n = static_cast<std::ptrdiff_t>(specs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    err.run([&] { out[static_cast<std::size_t>(i)] = render(specs[static_cast<std::size_t>(i)], grid); });
  }
  err.rethrow();
  return out;
}

std::vector<std::vector<double>> render_all_serial(std::span<const SignalSpec> specs,
                                                   const SamplingGrid& grid) {
  std::vector<std::vector<double>> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(render(s, grid));
  return out;
}

std::vector<metrics::WindowScore> score_windows(std::span<const WindowView> windows, double sample_rate_hz) {
  std::vector<metrics::WindowScore> out(windows.size());
  FirstError err;
  const auto n = static_cast<std::ptrdiff_t>(windows.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    err.run([&] {
      const auto& w = windows[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] = metrics::score_window(w.pred, w.truth, sample_rate_hz);
    });
  }
  err.rethrow();
  return out;
}

std::vector<metrics::WindowScore> score_windows_serial(std::span<const WindowView> windows,
                                                       double sample_rate_hz) {
  std::vector<metrics::WindowScore> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(metrics::score_window(w.pred, w.truth, sample_rate_hz));
  return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace timesynth::kernels
