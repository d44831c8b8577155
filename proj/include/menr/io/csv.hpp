#pragma once

// CSV emitters and readers. Header row mandatory, UTF-8, LF endings,
// numbers at %.17g so a written series re-reads bit-exact.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "menr/errors.hpp"
#include "menr/experiment.hpp"

namespace menr {
namespace io {

namespace detail {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace detail

inline constexpr const char* series_csv_header =
    "time_s,e_field_V_per_m,detuning_ccw_Hz,error_signal_V";

inline void write_series_csv(std::ostream& out, const StoredSeries& series) {
  out << series_csv_header << "\n";
  for (std::size_t k = 0; k < series.time_s.size(); ++k)
    out << detail::csv_num(series.time_s[k]) << ','
        << detail::csv_num(series.e_field_v_per_m[k]) << ','
        << detail::csv_num(series.detuning_ccw_hz[k]) << ','
        << detail::csv_num(series.error_signal_v[k]) << "\n";
}

inline void write_series_csv(const std::string& path, const StoredSeries& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_series_csv(out, series);
  if (!out) throw Error("write to '" + path + "' failed");
}

inline StoredSeries read_series_csv(std::istream& in) {
  StoredSeries series;
  std::string line;
  if (!std::getline(in, line))
    throw InsufficientDataError("empty CSV input");
  if (detail::split_line(line) != detail::split_line(series_csv_header))
    throw Error("unexpected CSV header '" + line + "'");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_line(line);
    if (fields.size() != 4)
      throw Error("CSV line " + std::to_string(line_no) + ": expected 4 fields");
    series.time_s.push_back(std::stod(fields[0]));
    series.e_field_v_per_m.push_back(std::stod(fields[1]));
    series.detuning_ccw_hz.push_back(std::stod(fields[2]));
    series.error_signal_v.push_back(std::stod(fields[3]));
  }
  if (series.time_s.size() >= 2)
    series.sample_rate_hz =
        (series.time_s.size() - 1) /
        (series.time_s.back() - series.time_s.front());
  return series;
}

inline StoredSeries read_series_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_series_csv(in);
}

inline constexpr const char* points_csv_header =
    "e_amplitude_V_per_m,delta_nu_Hz,sigma_Hz";

inline void write_points_csv(std::ostream& out, const MeasurementSeries& series) {
  out << points_csv_header << "\n";
  for (const auto& p : series.points)
    out << detail::csv_num(p.e_amplitude_v_per_m) << ','
        << detail::csv_num(p.delta_nu_hz) << ','
        << detail::csv_num(p.sigma_hz) << "\n";
}

inline void write_points_csv(const std::string& path,
                             const MeasurementSeries& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_points_csv(out, series);
  if (!out) throw Error("write to '" + path + "' failed");
}

inline MeasurementSeries read_points_csv(std::istream& in) {
  MeasurementSeries series;
  std::string line;
  if (!std::getline(in, line))
    throw InsufficientDataError("empty CSV input");
  if (detail::split_line(line) != detail::split_line(points_csv_header))
    throw Error("unexpected CSV header '" + line + "'");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_line(line);
    if (fields.size() != 3)
      throw Error("CSV line " + std::to_string(line_no) + ": expected 3 fields");
    series.points.push_back(
        {std::stod(fields[0]), std::stod(fields[1]), std::stod(fields[2])});
  }
  return series;
}

}  // namespace io
}  // namespace menr
