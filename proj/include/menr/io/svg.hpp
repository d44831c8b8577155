#pragma once

// Self-contained SVG plot generation for the sweep (points + error bars +
// fitted line) and the per-run constant summary (points + weighted-mean
// band). Styling is fixed and versioned: golden-file tests depend on the
// byte stream, so any styling change is a deliberate format bump.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "menr/analysis.hpp"
#include "menr/errors.hpp"
#include "menr/experiment.hpp"

namespace menr {
namespace io {

inline constexpr const char* svg_style_version = "menr-svg/1";

namespace detail {

inline std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline double nice_step(double range, int target_ticks) {
  if (!(range > 0.0)) return 1.0;
  const double raw = range / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  const double step = r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0;
  return step * mag;
}

// Fixed-geometry frame with linear axes and outward ticks.
class Frame {
public:
  static constexpr double width = 640.0, height = 480.0;
  static constexpr double ml = 82.0, mr = 24.0, mt = 42.0, mb = 58.0;

  Frame(double xmin, double xmax, double ymin, double ymax)
      : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax) {
    if (!(xmax_ > xmin_)) {
      const double pad = std::max(std::abs(xmin_) * 0.1, 1e-12);
      xmin_ -= pad;
      xmax_ += pad;
    }
    if (!(ymax_ > ymin_)) {
      const double pad = std::max(std::abs(ymin_) * 0.1, 1e-12);
      ymin_ -= pad;
      ymax_ += pad;
    }
  }

  double x(double v) const {
    return ml + (v - xmin_) / (xmax_ - xmin_) * (width - ml - mr);
  }
  double y(double v) const {
    return height - mb - (v - ymin_) / (ymax_ - ymin_) * (height - mt - mb);
  }
  double xmin() const { return xmin_; }
  double xmax() const { return xmax_; }
  double ymin() const { return ymin_; }
  double ymax() const { return ymax_; }

  void open(std::ostringstream& out, const std::string& title) const {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (int)width
        << "\" height=\"" << (int)height << "\" viewBox=\"0 0 " << (int)width
        << " " << (int)height << "\" data-style=\"" << svg_style_version
        << "\">\n";
    out << "<rect width=\"" << (int)width << "\" height=\"" << (int)height
        << "\" fill=\"#ffffff\"/>\n";
    out << "<text x=\"" << px(width / 2.0)
        << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\" fill=\"#222222\">"
        << title << "</text>\n";
  }

  void axes(std::ostringstream& out, const std::string& xlabel,
            const std::string& ylabel) const {
    out << "<rect x=\"" << px(ml) << "\" y=\"" << px(mt) << "\" width=\""
        << px(width - ml - mr) << "\" height=\"" << px(height - mt - mb)
        << "\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1\"/>\n";

    const double xstep = nice_step(xmax_ - xmin_, 5);
    for (double v = std::ceil(xmin_ / xstep) * xstep; v <= xmax_ + 1e-9 * xstep;
         v += xstep) {
      const double X = x(v);
      out << "<line x1=\"" << px(X) << "\" y1=\"" << px(height - mb)
          << "\" x2=\"" << px(X) << "\" y2=\"" << px(height - mb + 5)
          << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
      out << "<text x=\"" << px(X) << "\" y=\"" << px(height - mb + 19)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"11\" fill=\"#222222\">"
          << tick_label(std::abs(v) < 1e-12 * xstep ? 0.0 : v) << "</text>\n";
    }
    const double ystep = nice_step(ymax_ - ymin_, 5);
    for (double v = std::ceil(ymin_ / ystep) * ystep; v <= ymax_ + 1e-9 * ystep;
         v += ystep) {
      const double Y = y(v);
      out << "<line x1=\"" << px(ml - 5) << "\" y1=\"" << px(Y) << "\" x2=\""
          << px(ml) << "\" y2=\"" << px(Y)
          << "\" stroke=\"#222222\" stroke-width=\"1\"/>\n";
      out << "<text x=\"" << px(ml - 8) << "\" y=\"" << px(Y + 3.5)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
             "font-size=\"11\" fill=\"#222222\">"
          << tick_label(std::abs(v) < 1e-12 * ystep ? 0.0 : v) << "</text>\n";
    }

    out << "<text x=\"" << px((ml + width - mr) / 2.0) << "\" y=\""
        << px(height - 12)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\" fill=\"#222222\">"
        << xlabel << "</text>\n";
    out << "<text x=\"16\" y=\"" << px((mt + height - mb) / 2.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\" fill=\"#222222\" transform=\"rotate(-90 16 "
        << px((mt + height - mb) / 2.0) << ")\">" << ylabel << "</text>\n";
  }

private:
  double xmin_, xmax_, ymin_, ymax_;
};

inline void error_bar(std::ostringstream& out, const Frame& f, double x,
                      double y, double sigma, const char* color) {
  const double X = f.x(x);
  const double y_lo = f.y(y - sigma), y_hi = f.y(y + sigma);
  out << "<line x1=\"" << px(X) << "\" y1=\"" << px(y_lo) << "\" x2=\"" << px(X)
      << "\" y2=\"" << px(y_hi) << "\" stroke=\"" << color
      << "\" stroke-width=\"1.2\"/>\n";
  for (double Y : {y_lo, y_hi})
    out << "<line x1=\"" << px(X - 3) << "\" y1=\"" << px(Y) << "\" x2=\""
        << px(X + 3) << "\" y2=\"" << px(Y) << "\" stroke=\"" << color
        << "\" stroke-width=\"1.2\"/>\n";
}

}  // namespace detail

/// Sweep figure: measured splitting vs field amplitude with one-sigma
/// bars and the weighted fit line.
inline std::string sweep_plot_svg(const MeasurementSeries& series,
                                  const FitResult& fit) {
  if (series.points.empty())
    throw InsufficientDataError("nothing to plot");
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
  bool first = true;
  for (const auto& p : series.points) {
    xmin = first ? p.e_amplitude_v_per_m : std::min(xmin, p.e_amplitude_v_per_m);
    xmax = first ? p.e_amplitude_v_per_m : std::max(xmax, p.e_amplitude_v_per_m);
    ymin = first ? p.delta_nu_hz - p.sigma_hz
                 : std::min(ymin, p.delta_nu_hz - p.sigma_hz);
    ymax = first ? p.delta_nu_hz + p.sigma_hz
                 : std::max(ymax, p.delta_nu_hz + p.sigma_hz);
    first = false;
  }
  const double xpad = (xmax - xmin) * 0.05, ypad = (ymax - ymin) * 0.08;
  detail::Frame f(xmin - xpad, xmax + xpad, ymin - ypad, ymax + ypad);

  std::ostringstream out;
  f.open(out, "Splitting vs field amplitude (" + series.config_label + ")");
  f.axes(out, "E amplitude (V/m)", "delta nu at f_E (Hz)");

  out << "<line x1=\"" << detail::px(f.x(f.xmin())) << "\" y1=\""
      << detail::px(f.y(fit.intercept + fit.slope * f.xmin())) << "\" x2=\""
      << detail::px(f.x(f.xmax())) << "\" y2=\""
      << detail::px(f.y(fit.intercept + fit.slope * f.xmax()))
      << "\" stroke=\"#b22222\" stroke-width=\"1.5\"/>\n";

  for (const auto& p : series.points) {
    detail::error_bar(out, f, p.e_amplitude_v_per_m, p.delta_nu_hz, p.sigma_hz,
                      "#4682b4");
    out << "<circle cx=\"" << detail::px(f.x(p.e_amplitude_v_per_m))
        << "\" cy=\"" << detail::px(f.y(p.delta_nu_hz))
        << "\" r=\"3\" fill=\"#4682b4\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

/// Per-run constant summary: one point per run with one-sigma bars and the
/// weighted-mean band.
inline std::string eta_plot_svg(const std::vector<WeightedValue>& runs,
                                const WeightedValue& mean,
                                const std::string& title) {
  if (runs.empty())
    throw InsufficientDataError("nothing to plot");
  double ymin = mean.value - mean.sigma, ymax = mean.value + mean.sigma;
  for (const auto& r : runs) {
    ymin = std::min(ymin, r.value - r.sigma);
    ymax = std::max(ymax, r.value + r.sigma);
  }
  const double ypad = (ymax - ymin) * 0.08;
  detail::Frame f(0.0, runs.size() + 1.0, ymin - ypad, ymax + ypad);

  std::ostringstream out;
  f.open(out, title);

  out << "<rect x=\"" << detail::px(f.x(f.xmin())) << "\" y=\""
      << detail::px(f.y(mean.value + mean.sigma)) << "\" width=\""
      << detail::px(f.x(f.xmax()) - f.x(f.xmin())) << "\" height=\""
      << detail::px(f.y(mean.value - mean.sigma) - f.y(mean.value + mean.sigma))
      << "\" fill=\"#b22222\" fill-opacity=\"0.12\"/>\n";
  out << "<line x1=\"" << detail::px(f.x(f.xmin())) << "\" y1=\""
      << detail::px(f.y(mean.value)) << "\" x2=\"" << detail::px(f.x(f.xmax()))
      << "\" y2=\"" << detail::px(f.y(mean.value))
      << "\" stroke=\"#b22222\" stroke-width=\"1.2\" "
         "stroke-dasharray=\"6 3\"/>\n";

  f.axes(out, "run index", "2 eta (m V^-1 T^-1)");

  for (std::size_t i = 0; i < runs.size(); ++i) {
    detail::error_bar(out, f, double(i + 1), runs[i].value, runs[i].sigma,
                      "#4682b4");
    out << "<circle cx=\"" << detail::px(f.x(double(i + 1))) << "\" cy=\""
        << detail::px(f.y(runs[i].value)) << "\" r=\"3\" fill=\"#4682b4\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace io
}  // namespace menr
