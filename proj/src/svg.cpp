#include "anthem/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "anthem/error.hpp"
#include "anthem/text.hpp"

namespace anthem::report {
namespace {

struct Rgb {
  double r, g, b;
};

constexpr Rgb kCold{33, 102, 172};
constexpr Rgb kNeutral{247, 247, 247};
constexpr Rgb kWarm{178, 24, 43};

std::string hex(const Rgb& c) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out = "#";
  for (double channel : {c.r, c.g, c.b}) {
    const int v = std::clamp(static_cast<int>(std::lround(channel)), 0, 255);
    out.push_back(digits[v >> 4]);
    out.push_back(digits[v & 0xF]);
  }
  return out;
}

std::string num(double v) { return text::format_fixed(v, 1); }

constexpr const char* kHeader =
    "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" ";

void histogram_panel(std::ostringstream& svg, const std::map<int, std::size_t>& bins, double x0, double y0,
                     double width, double height, std::string_view caption, std::string_view bin_prefix) {
  svg << "<g class=\"panel\">\n";
  svg << "<text x=\"" << num(x0 + width / 2) << "\" y=\"" << num(y0 - 8)
      << "\" text-anchor=\"middle\" font-size=\"13\">" << xml_escape(caption) << "</text>\n";
  svg << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0 + height) << "\" x2=\"" << num(x0 + width) << "\" y2=\""
      << num(y0 + height) << "\" stroke=\"#333333\"/>\n";
  if (bins.empty()) {
    svg << "</g>\n";
    return;
  }
  std::size_t peak = 1;
  for (const auto& [_, count] : bins) peak = std::max(peak, count);
  const double slot = width / static_cast<double>(bins.size());
  std::size_t i = 0;
  for (const auto& [bin, count] : bins) {
    const double h = height * static_cast<double>(count) / static_cast<double>(peak);
    const double x = x0 + slot * static_cast<double>(i) + slot * 0.1;
    svg << "<rect class=\"bar\" data-bin=\"" << bin << "\" data-count=\"" << count << "\" x=\"" << num(x)
        << "\" y=\"" << num(y0 + height - h) << "\" width=\"" << num(slot * 0.8) << "\" height=\"" << num(h)
        << "\" fill=\"#4a78a8\"/>\n";
    svg << "<text x=\"" << num(x + slot * 0.4) << "\" y=\"" << num(y0 + height + 14)
        << "\" text-anchor=\"middle\" font-size=\"10\">" << bin_prefix << bin << "</text>\n";
    svg << "<text x=\"" << num(x + slot * 0.4) << "\" y=\"" << num(y0 + height - h - 3)
        << "\" text-anchor=\"middle\" font-size=\"9\">" << count << "</text>\n";
    ++i;
  }
  svg << "</g>\n";
}

}  // namespace

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        // Control characters other than tab/newline are not allowed in XML 1.0.
        if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r') {
          out.push_back('?');
        } else {
          out.push_back(c);
        }
    }
  }
  return out;
}

std::string diverging_color(double value) {
  const double v = std::clamp(value, -1.0, 1.0);
  const Rgb& end = v < 0 ? kCold : kWarm;
  const double t = std::abs(v);
  return hex({kNeutral.r + (end.r - kNeutral.r) * t, kNeutral.g + (end.g - kNeutral.g) * t,
              kNeutral.b + (end.b - kNeutral.b) * t});
}

std::string render_heatmap_svg(const Eigen::MatrixXd& values, const std::vector<std::string>& row_labels,
                               const std::vector<std::string>& col_labels, const HeatmapOptions& options) {
  if (static_cast<Eigen::Index>(row_labels.size()) != values.rows() ||
      static_cast<Eigen::Index>(col_labels.size()) != values.cols()) {
    throw Error("heatmap: label count does not match matrix shape");
  }
  const bool masked = options.undefined.size() > 0;
  if (masked && (options.undefined.rows() != values.rows() || options.undefined.cols() != values.cols())) {
    throw Error("heatmap: mask shape does not match matrix shape");
  }
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (std::isnan(values(r, c)) && !(masked && options.undefined(r, c))) throw Error("heatmap: NaN entry");
    }
  }

  constexpr double cell_w = 90, cell_h = 34, left = 180, top = 90, legend_h = 60;
  const double width = left + cell_w * static_cast<double>(values.cols()) + 20;
  const double height = top + cell_h * static_cast<double>(values.rows()) + legend_h;

  std::ostringstream svg;
  svg << kHeader << "width=\"" << num(width) << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width)
      << " " << num(height) << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height) << "\" fill=\"#ffffff\"/>\n";
  if (!options.title.empty()) {
    svg << "<text x=\"" << num(width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << xml_escape(options.title) << "</text>\n";
  }
  for (std::size_t c = 0; c < col_labels.size(); ++c) {
    const double x = left + cell_w * (static_cast<double>(c) + 0.5);
    svg << "<text x=\"" << num(x) << "\" y=\"" << num(top - 10) << "\" text-anchor=\"middle\" font-size=\"11\">"
        << xml_escape(col_labels[c]) << "</text>\n";
  }
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    const double y = top + cell_h * static_cast<double>(r);
    svg << "<text x=\"" << num(left - 8) << "\" y=\"" << num(y + cell_h / 2 + 4)
        << "\" text-anchor=\"end\" font-size=\"11\">" << xml_escape(row_labels[static_cast<std::size_t>(r)])
        << "</text>\n";
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double x = left + cell_w * static_cast<double>(c);
      const bool undefined = masked && options.undefined(r, c);
      const std::string fill = undefined ? "#cccccc" : diverging_color(values(r, c));
      const std::string label = undefined ? "n/a" : text::format_fixed(values(r, c), 2);
      svg << "<rect class=\"cell\" x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cell_w)
          << "\" height=\"" << num(cell_h) << "\" fill=\"" << fill << "\" stroke=\"#ffffff\"/>\n";
      svg << "<text x=\"" << num(x + cell_w / 2) << "\" y=\"" << num(y + cell_h / 2 + 4)
          << "\" text-anchor=\"middle\" font-size=\"11\">" << label << "</text>\n";
    }
  }
  // Legend: five swatches across [-1, 1].
  const double legend_y = top + cell_h * static_cast<double>(values.rows()) + 20;
  for (int i = 0; i <= 4; ++i) {
    const double v = -1.0 + 0.5 * i;
    const double x = left + 40.0 * i;
    svg << "<rect class=\"legend\" x=\"" << num(x) << "\" y=\"" << num(legend_y) << "\" width=\"40.0\" height=\"12.0\" fill=\""
        << diverging_color(v) << "\"/>\n";
    svg << "<text x=\"" << num(x + 20) << "\" y=\"" << num(legend_y + 26) << "\" text-anchor=\"middle\" font-size=\"9\">"
        << text::format_fixed(v, 1) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

int octave_of(int pitch) {
  // Floor division; pitch is non-negative for MIDI input.
  return pitch / 12 - 1;
}

std::map<int, std::size_t> octave_histogram(const score::Performance& perf) {
  std::map<int, std::size_t> bins;
  for (const auto& n : perf.notes) ++bins[octave_of(n.pitch)];
  return bins;
}

std::vector<int> beat_positions(const score::Performance& perf) {
  std::vector<score::TimeSignature> meters;
  for (const auto& ts : perf.time_signatures) {
    if (!meters.empty() && meters.back().tick == ts.tick) {
      meters.back() = ts;
    } else {
      meters.push_back(ts);
    }
  }
  if (meters.empty() || meters.front().tick > 0) meters.insert(meters.begin(), score::TimeSignature{0, 4, 4});

  const auto division = static_cast<std::uint64_t>(perf.tempo_map.division);
  std::vector<int> positions;
  positions.reserve(perf.notes.size());
  std::size_t m = 0;
  for (const auto& n : perf.notes) {  // sorted by onset
    while (m + 1 < meters.size() && meters[m + 1].tick <= n.onset_tick) ++m;
    const auto& meter = meters[m];
    const std::uint64_t beat_index =
        (n.onset_tick - meter.tick) * static_cast<std::uint64_t>(meter.denominator) / (4 * division);
    positions.push_back(static_cast<int>(beat_index % static_cast<std::uint64_t>(std::max(1, meter.numerator))) + 1);
  }
  return positions;
}

std::map<int, std::size_t> beat_position_histogram(const score::Performance& perf) {
  std::map<int, std::size_t> bins;
  for (int p : beat_positions(perf)) ++bins[p];
  return bins;
}

std::string render_distributions_svg(const score::Performance& perf, std::string_view title) {
  constexpr double width = 640, height = 300, panel_w = 260, panel_h = 180;
  std::ostringstream svg;
  svg << kHeader << "width=\"" << num(width) << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width)
      << " " << num(height) << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height) << "\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    svg << "<text x=\"" << num(width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
        << "</text>\n";
  }
  histogram_panel(svg, octave_histogram(perf), 40, 70, panel_w, panel_h, "Octave distribution", "");
  histogram_panel(svg, beat_position_histogram(perf), 340, 70, panel_w, panel_h, "Beat position distribution", "");
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace anthem::report
