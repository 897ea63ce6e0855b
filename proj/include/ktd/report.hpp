#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ktd {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> std;
};

/// Log-log SVG with one mean polyline and a shaded +-1 std band per series.
/// Non-positive or non-finite points are dropped from the drawing.
std::string render_loglog_svg(const std::string& title, const std::string& xLabel, const std::string& yLabel,
                              const std::vector<PlotSeries>& series);

void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Shortest round-trip decimal representation, "nan"/"inf" for non-finite.
std::string format_double(double v);

}  // namespace ktd
