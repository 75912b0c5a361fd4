#include "sso/artifacts.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace sso {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct CsvWriter::Impl {
  std::ofstream out;
  std::size_t columns = 0;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns,
                     const Provenance& prov)
    : impl_(std::make_unique<Impl>()) {
  impl_->out.open(path);
  if (!impl_->out) throw ValidationError("csv: cannot open " + path + " for writing");
  impl_->columns = columns.size();
  impl_->out << "# tool_version=" << kToolVersion << "\n";
  impl_->out << "# config_hash=" << prov.config_hash << "\n";
  impl_->out << "# command=" << prov.command << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i)
    impl_->out << columns[i] << (i + 1 < columns.size() ? "," : "\n");
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != impl_->columns) throw ValidationError("csv: column count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i)
    impl_->out << format_double(values[i]) << (i + 1 < values.size() ? "," : "\n");
}

void CsvWriter::row(const std::vector<std::string>& values) {
  if (values.size() != impl_->columns) throw ValidationError("csv: column count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i)
    impl_->out << values[i] << (i + 1 < values.size() ? "," : "\n");
}

namespace {

double axis_value(double v, bool log_scale) { return log_scale ? std::log10(v) : v; }

}  // namespace

void write_svg(const std::string& path, const SvgPlot& plot) {
  std::ofstream out(path);
  if (!out) throw ValidationError("svg: cannot open " + path + " for writing");

  const double w = 900, h = 540;
  const double ml = 80, mr = 30, mt = 50, mb = 60;
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  bool first = true;
  for (const auto& s : plot.series) {
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      const double xv = axis_value(s.x(i), plot.log_x);
      double yv = s.y(i);
      if (plot.log_y) {
        if (!(yv > 0.0) || !std::isfinite(yv)) continue;
        yv = std::log10(yv);
      }
      if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
      if (first) {
        x_lo = x_hi = xv;
        y_lo = y_hi = yv;
        first = false;
      } else {
        x_lo = std::min(x_lo, xv);
        x_hi = std::max(x_hi, xv);
        y_lo = std::min(y_lo, yv);
        y_hi = std::max(y_hi, yv);
      }
    }
  }
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;
  const double y_pad = 0.05 * (y_hi - y_lo);
  y_lo -= y_pad;
  y_hi += y_pad;

  auto px = [&](double xv) { return ml + (xv - x_lo) / (x_hi - x_lo) * (w - ml - mr); };
  auto py = [&](double yv) { return h - mb - (yv - y_lo) / (y_hi - y_lo) * (h - mt - mb); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"18\">"
      << plot.title << "</text>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 14
      << "\" text-anchor=\"middle\" font-size=\"14\">" << plot.x_label << "</text>\n";
  out << "<text x=\"20\" y=\"" << h / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 20 " << h / 2
      << ")\">" << plot.y_label << "</text>\n";
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr << "\" height=\""
      << h - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Axis ticks (5 per axis, values in data units).
  out.precision(6);
  for (int k = 0; k <= 5; ++k) {
    const double fx = x_lo + (x_hi - x_lo) * k / 5.0;
    const double fy = y_lo + (y_hi - y_lo) * k / 5.0;
    const double vx = plot.log_x ? std::pow(10.0, fx) : fx;
    const double vy = plot.log_y ? std::pow(10.0, fy) : fy;
    out << "<text x=\"" << px(fx) << "\" y=\"" << h - mb + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << vx << "</text>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << vy << "</text>\n";
  }

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  int ci = 0;
  for (const auto& s : plot.series) {
    out << "<polyline fill=\"none\" stroke=\"" << kColors[ci % 8]
        << "\" stroke-width=\"1.2\" points=\"";
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      const double xv = axis_value(s.x(i), plot.log_x);
      double yv = s.y(i);
      if (plot.log_y) {
        if (!(yv > 0.0) || !std::isfinite(yv)) continue;
        yv = std::log10(yv);
      }
      if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
      out << px(xv) << "," << py(std::min(std::max(yv, y_lo), y_hi)) << " ";
    }
    out << "\"/>\n";
    out << "<text x=\"" << w - mr - 10 << "\" y=\"" << mt + 18 + 16 * ci
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << kColors[ci % 8] << "\">"
        << s.label << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

}  // namespace sso
