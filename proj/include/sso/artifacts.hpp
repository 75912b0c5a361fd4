#pragma once

// CSV and SVG artifact emission. CSV: UTF-8, comma-separated, header row,
// 17-significant-digit doubles, provenance comment header (config hash, tool
// version, command line). SVG: minimal polyline plots for sweeps and time
// series.

#include <memory>
#include <string>
#include <vector>

#include "sso/network.hpp"

namespace sso {

inline constexpr const char* kToolVersion = "1.0.0";

struct Provenance {
  std::string config_hash;
  std::string command;
};

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns,
            const Provenance& prov);
  ~CsvWriter();
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& values);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string format_double(double v);  // 17 significant digits

struct SvgSeries {
  std::string label;
  RealVector x, y;
};

struct SvgPlot {
  std::string title, x_label, y_label;
  bool log_x = false, log_y = false;
  std::vector<SvgSeries> series;
};

void write_svg(const std::string& path, const SvgPlot& plot);

}  // namespace sso
