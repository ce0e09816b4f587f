#pragma once

// SVG 1.1 renderers for correlation heatmaps and per-anthem distributions.
// Output is byte-deterministic for identical input.

#include <Eigen/Dense>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "anthem/score.hpp"

namespace anthem::report {

struct HeatmapOptions {
  std::string title;
  /// Same shape as the value matrix when non-empty; true cells are drawn as "n/a"
  /// and their values are ignored.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> undefined;
};

/// `#rrggbb` on a diverging scale: -1 cold, 0 neutral, +1 warm. Values are clamped.
std::string diverging_color(double value);

/// Throws Error on a NaN entry that is not masked, or on label count mismatch.
std::string render_heatmap_svg(const Eigen::MatrixXd& values, const std::vector<std::string>& row_labels,
                               const std::vector<std::string>& col_labels, const HeatmapOptions& options = {});

/// Octave index floor(pitch / 12) - 1, so middle C (60) is octave 4.
int octave_of(int pitch);

std::map<int, std::size_t> octave_histogram(const score::Performance& perf);

/// 1-based beat position of every note onset within its measure, measured in
/// the denominator unit of the time signature in effect. Measures restart at
/// each time-signature event; 4/4 applies before the first one.
std::vector<int> beat_positions(const score::Performance& perf);

std::map<int, std::size_t> beat_position_histogram(const score::Performance& perf);

std::string render_distributions_svg(const score::Performance& perf, std::string_view title = {});

std::string xml_escape(std::string_view s);

}  // namespace anthem::report
