/// @file plot.hpp
/// @brief Minimal SVG line plots with a logarithmic y axis.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slipflow/diagnostics.hpp"

namespace slipflow::harness {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  /// Drawn as a dashed line over its window and annotated with its rate.
  std::optional<DecayFit> fit;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "t";
  std::string y_label = "norm";
};

struct PlotSummary {
  int polylines = 0;
  int annotations = 0;
  int dropped_points = 0;  ///< non-positive values left off the log axis
};

/// Renders the SVG document. Throws DomainError for an empty series list, a
/// series with no points, mismatched x/y lengths or no positive value at all.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& opts,
                       PlotSummary* summary = nullptr);

/// Writes render_svg(...) to `path`.
PlotSummary emit_plot(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
                      const PlotOptions& opts = {});

}  // namespace slipflow::harness
