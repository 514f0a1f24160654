#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace timesynth {

// One row of the long-format combined metrics table.
struct MetricsRow {
  std::string family;
  std::string model;
  std::string occasion;
  std::string series_id;
  double mae = 0.0;
  double mse = 0.0;
  double freq_err_hz = 0.0;
  double phase_err_deg = 0.0;
};

inline constexpr std::string_view kMetricsHeader =
    "family,model,occasion,series_id,mae,mse,freq_err_hz,phase_err_deg";

std::string format_metrics_csv(const std::vector<MetricsRow>& rows);

// Columns are located by header name, so order does not matter. A missing
// column raises ConfigError naming it.
std::vector<MetricsRow> parse_metrics_csv(std::string_view text);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

// Metric value by column name; "amplitude", "frequency" and "phase" are
// accepted as aliases for mae, freq_err_hz and phase_err_deg.
double metric_value(const MetricsRow& row, std::string_view metric);
std::string canonical_metric(std::string_view metric);

}  // namespace timesynth
