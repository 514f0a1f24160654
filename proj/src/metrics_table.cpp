#include "timesynth/metrics_table.hpp"

#include <array>
#include <sstream>

#include "timesynth/error.hpp"
#include "timesynth/io.hpp"

namespace timesynth {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

}  // namespace

std::string format_metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.family + ',' + r.model + ',' + r.occasion + ',' + r.series_id + ',' + io::format_double(r.mae) +
           ',' + io::format_double(r.mse) + ',' + io::format_double(r.freq_err_hz) + ',' +
           io::format_double(r.phase_err_deg) + '\n';
  }
  return out;
}

std::vector<MetricsRow> parse_metrics_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("metrics table is empty");
  const auto header = split_csv_line(trim(line));

  static constexpr std::array<std::string_view, 8> kColumns{
      "family", "model", "occasion", "series_id", "mae", "mse", "freq_err_hz", "phase_err_deg"};
  std::array<std::size_t, 8> pos{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    std::size_t found = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == kColumns[c]) found = i;
    }
    if (found == header.size()) {
      throw ConfigError("metrics table is missing column '" + std::string(kColumns[c]) + "' (header: " + line + ")");
    }
    pos[c] = found;
  }

  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw InvalidInput("metrics table line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    MetricsRow r;
    r.family = cells[pos[0]];
    r.model = cells[pos[1]];
    r.occasion = cells[pos[2]];
    r.series_id = cells[pos[3]];
    try {
      r.mae = std::stod(cells[pos[4]]);
      r.mse = std::stod(cells[pos[5]]);
      r.freq_err_hz = std::stod(cells[pos[6]]);
      r.phase_err_deg = std::stod(cells[pos[7]]);
    } catch (const std::exception&) {
      throw InvalidInput("metrics table line " + std::to_string(line_no) + ": non-numeric metric value");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  return parse_metrics_csv(io::read_text(path));
}

std::string canonical_metric(std::string_view metric) {
  if (metric == "mae" || metric == "amplitude") return "mae";
  if (metric == "mse") return "mse";
  if (metric == "freq_err_hz" || metric == "frequency" || metric == "freq") return "freq_err_hz";
  if (metric == "phase_err_deg" || metric == "phase") return "phase_err_deg";
  throw ConfigError("unknown metric '" + std::string(metric) +
                    "' (expected mae|amplitude, mse, freq_err_hz|frequency, phase_err_deg|phase)");
}

double metric_value(const MetricsRow& row, std::string_view metric) {
  const auto m = canonical_metric(metric);
  if (m == "mae") return row.mae;
  if (m == "mse") return row.mse;
  if (m == "freq_err_hz") return row.freq_err_hz;
  return row.phase_err_deg;
}

}  // namespace timesynth
