/// @file plot.cpp
/// @brief SVG rendering for log-scale time series.
#include "slipflow/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "slipflow/errors.hpp"

namespace slipflow::harness {

namespace {

constexpr double kWidth = 720, kHeight = 460;
constexpr double kLeft = 80, kRight = 200, kTop = 40, kBottom = 70;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opts,
                       PlotSummary* summary) {
  if (series.empty()) throw DomainError("emit_plot: no series given");
  double xmin = INFINITY, xmax = -INFINITY, lmin = INFINITY, lmax = -INFINITY;
  int dropped = 0;
  for (const PlotSeries& s : series) {
    if (s.x.empty()) throw DomainError("emit_plot: series '" + s.label + "' is empty");
    if (s.x.size() != s.y.size()) {
      throw DomainError("emit_plot: series '" + s.label + "' has mismatched x and y lengths");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      if (s.y[i] > 0.0 && std::isfinite(s.y[i])) {
        lmin = std::min(lmin, std::log10(s.y[i]));
        lmax = std::max(lmax, std::log10(s.y[i]));
      } else {
        ++dropped;
      }
    }
  }
  if (!std::isfinite(lmin)) throw DomainError("emit_plot: no positive values to plot");
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  const double dlo = std::floor(lmin), dhi = std::max(std::ceil(lmax), dlo + 1.0);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  const auto py = [&](double l) { return kTop + (dhi - l) / (dhi - dlo) * ph; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      kWidth, kHeight);
  if (!opts.title.empty()) {
    svg += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                       kLeft + pw / 2, escape(opts.title));
  }
  svg += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
      kTop, pw, ph);

  // Decade gridlines on y, five ticks on x.
  const int decades = static_cast<int>(dhi - dlo);
  const int ystep = std::max(1, decades / 8);
  for (int d = static_cast<int>(dlo); d <= static_cast<int>(dhi); d += ystep) {
    const double y = py(d);
    svg += fmt::format(
        "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n"
        "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">1e{}</text>\n",
        kLeft, y, kLeft + pw, y, kLeft - 6, y + 4, d);
  }
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.3g}</text>\n",
                       px(xv), kTop + ph + 18, xv);
  }
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n",
                     kLeft + pw / 2, kTop + ph + 40, escape(opts.x_label));
  svg += fmt::format(
      "<text x=\"18\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2f})\">{} "
      "(log scale)</text>\n",
      kTop + ph / 2, kTop + ph / 2, escape(opts.y_label));

  PlotSummary info;
  info.dropped_points = dropped;
  double legend_y = kTop + 10;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.y[i] > 0.0) || !std::isfinite(s.y[i])) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(s.x[i]), py(std::log10(s.y[i])));
    }
    if (!pts.empty()) pts.pop_back();
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                       color, pts);
    ++info.polylines;

    const double lx = kLeft + pw + 12;
    svg += fmt::format(
        "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" "
        "stroke-width=\"2\"/>\n<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n",
        lx, legend_y, lx + 18, legend_y, color, lx + 24, legend_y + 4, escape(s.label));
    legend_y += 18;

    if (s.fit && s.fit->C > 0.0) {
      const DecayFit& f = *s.fit;
      const auto model = [&](double t) { return std::log10(f.C) - f.eta * t / std::log(10.0); };
      svg += fmt::format(
          "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" "
          "stroke-dasharray=\"5,4\"/>\n",
          px(f.t0), py(model(f.t0)), px(f.t1), py(model(f.t1)), color);
      svg += fmt::format(
          "<text class=\"rate\" x=\"{:.2f}\" y=\"{:.2f}\" fill=\"{}\">rate {:.4g}, R2 {:.4f}</text>\n",
          lx + 24, legend_y + 2, color, f.eta, f.r2);
      legend_y += 18;
      ++info.annotations;
    }
  }
  if (dropped > 0) {
    svg += fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\">{} non-positive point{} omitted from the "
        "log axis</text>\n",
        kLeft, kHeight - 8, dropped, dropped == 1 ? "" : "s");
  }
  svg += "</svg>\n";
  if (summary != nullptr) *summary = info;
  return svg;
}

PlotSummary emit_plot(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
                      const PlotOptions& opts) {
  PlotSummary info;
  const std::string svg = render_svg(series, opts, &info);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DomainError("emit_plot: cannot open " + path.string());
  out << svg;
  return info;
}

}  // namespace slipflow::harness
