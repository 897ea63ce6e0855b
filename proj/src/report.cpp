#include "ktd/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ktd {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

bool drawable(double x, double y) { return std::isfinite(x) && std::isfinite(y) && x > 0.0 && y > 0.0; }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string render_loglog_svg(const std::string& title, const std::string& xLabel, const std::string& yLabel,
                              const std::vector<PlotSeries>& series) {
  const double width = 640, height = 440, left = 80, right = 160, top = 40, bottom = 60;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double lo = s.mean[i] - s.std[i];
      const double hi = s.mean[i] + s.std[i];
      if (!drawable(s.x[i], s.mean[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, lo > 0 ? lo : s.mean[i]);
      ymax = std::max(ymax, std::isfinite(hi) ? hi : s.mean[i]);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 1;
    xmax = 10;
    ymin = 1;
    ymax = 10;
  }
  const double lx0 = std::log10(xmin), lx1 = std::log10(xmax) + (xmax == xmin ? 1 : 0);
  const double ly0 = std::floor(std::log10(ymin)), ly1 = std::ceil(std::log10(ymax)) + (ymax == ymin ? 1 : 0);
  auto px = [&](double x) { return left + (std::log10(x) - lx0) / (lx1 - lx0) * (width - left - right); };
  auto py = [&](double y) { return top + (ly1 - std::log10(y)) / (ly1 - ly0) * (height - top - bottom); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right << "\" height=\""
      << height - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(ly0); e <= static_cast<int>(ly1); ++e) {
    const double y = py(std::pow(10.0, e));
    svg << "<line x1=\"" << left << "\" x2=\"" << width - right << "\" y1=\"" << y << "\" y2=\"" << y
        << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\" font-size=\"11\">1e" << e
        << "</text>\n";
  }
  svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 16 << "\" text-anchor=\"middle\" font-size=\"13\">"
      << xLabel << "</text>\n";
  svg << "<text x=\"18\" y=\"" << (top + height - bottom) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << (top + height - bottom) / 2 << ")\">" << yLabel << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    std::ostringstream upper, lower, line;
    std::vector<std::pair<double, double>> lo;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!drawable(s.x[i], s.mean[i])) continue;
      const double hi = s.mean[i] + s.std[i];
      const double low = s.mean[i] - s.std[i];
      line << px(s.x[i]) << "," << py(s.mean[i]) << " ";
      upper << px(s.x[i]) << "," << py(std::isfinite(hi) ? hi : s.mean[i]) << " ";
      lo.emplace_back(px(s.x[i]), py(low > 0 ? low : std::pow(10.0, ly0)));
    }
    std::reverse(lo.begin(), lo.end());
    for (auto [x, y] : lo) lower << x << "," << y << " ";
    svg << "<polygon points=\"" << upper.str() << lower.str() << "\" fill=\"" << color
        << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    svg << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    const double ly = top + 18.0 * static_cast<double>(si + 1);
    svg << "<text x=\"" << width - right + 10 << "\" y=\"" << ly << "\" font-size=\"12\" fill=\"" << color << "\">"
        << s.label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ktd
