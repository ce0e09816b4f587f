#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "anthem/analysis/agreement.hpp"
#include "anthem/analysis/correlation.hpp"
#include "anthem/analysis/report.hpp"
#include "anthem/analysis/standardize.hpp"
#include "anthem/error.hpp"

namespace anthem::analysis {
namespace {

double pairs(double n) { return n * (n - 1.0) / 2.0; }

std::vector<int> distinct(const std::vector<int>& v) {
  std::vector<int> out(v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

Eigen::MatrixXi contingency_table(const std::vector<int>& a, const std::vector<int>& b, std::vector<int>* row_labels,
                                  std::vector<int>* col_labels) {
  if (a.size() != b.size()) throw Error("cluster agreement: partitions have different lengths");
  const auto rows = distinct(a);
  const auto cols = distinct(b);
  Eigen::MatrixXi table = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto r = std::lower_bound(rows.begin(), rows.end(), a[i]) - rows.begin();
    const auto c = std::lower_bound(cols.begin(), cols.end(), b[i]) - cols.begin();
    ++table(r, c);
  }
  if (row_labels) *row_labels = rows;
  if (col_labels) *col_labels = cols;
  return table;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  const Eigen::MatrixXi table = contingency_table(a, b);
  const double n = static_cast<double>(a.size());
  double index = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) index += pairs(table(r, c));
  }
  double sum_a = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r) sum_a += pairs(table.row(r).sum());
  double sum_b = 0.0;
  for (Eigen::Index c = 0; c < table.cols(); ++c) sum_b += pairs(table.col(c).sum());
  const double total = pairs(n);

  // Scaled by the total pair count so integer inputs stay exact.
  const double numerator = index * total - sum_a * sum_b;
  const double denominator = 0.5 * (sum_a + sum_b) * total - sum_a * sum_b;
  if (total == 0.0 || denominator == 0.0) return 1.0;
  return numerator / denominator;
}

double cramers_v(const std::vector<int>& a, const std::vector<int>& b) {
  const Eigen::MatrixXi table = contingency_table(a, b);
  const auto smaller = std::min(table.rows(), table.cols());
  if (smaller < 2) return 0.0;
  const double n = static_cast<double>(a.size());
  const Eigen::VectorXd row_sums = table.cast<double>().rowwise().sum();
  const Eigen::RowVectorXd col_sums = table.cast<double>().colwise().sum();
  double ratio = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      const double o = table(r, c);
      ratio += o * o / (row_sums(r) * col_sums(c));
    }
  }
  const double chi2 = std::max(0.0, n * (ratio - 1.0));
  return std::clamp(std::sqrt(chi2 / (n * static_cast<double>(smaller - 1))), 0.0, 1.0);
}

Agreement cluster_agreement(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw Error("cluster agreement: partitions have different lengths");
  if (a.empty()) throw Error("cluster agreement: empty partitions");
  Agreement out;
  out.contingency = contingency_table(a, b, &out.row_labels, &out.col_labels);
  out.adjusted_rand = adjusted_rand_index(a, b);
  out.cramers_v = cramers_v(a, b);
  return out;
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::kVeryLow: return "Very Low";
    case Label::kLow: return "Low";
    case Label::kSlightlyLow: return "Slightly Low";
    case Label::kAverage: return "Average";
    case Label::kSlightlyHigh: return "Slightly High";
    case Label::kHigh: return "High";
    case Label::kVeryHigh: return "Very High";
  }
  return "Average";
}

Label label_for_z(double z) {
  if (z >= 1.0) return Label::kVeryHigh;
  if (z >= 0.5) return Label::kHigh;
  if (z >= 0.15) return Label::kSlightlyHigh;
  if (z > -0.15) return Label::kAverage;
  if (z > -0.5) return Label::kSlightlyLow;
  if (z > -1.0) return Label::kLow;
  return Label::kVeryLow;
}

QualitativeTable qualitative_labels(const indices::IndexJoin& view) {
  const auto n = view.countries.size();
  if (n < 4) throw DataError("qualitative table for '" + view.index_name + "' needs at least 4 countries");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto sx = view.scores(static_cast<Eigen::Index>(x));
    const auto sy = view.scores(static_cast<Eigen::Index>(y));
    return sx != sy ? sx < sy : view.countries[x] < view.countries[y];
  });
  const std::size_t half = n / 2;

  QualitativeTable table;
  table.index_name = view.index_name;
  table.direction = view.direction;
  table.low_count = half;
  table.high_count = half;
  table.median_score = n % 2 ? view.scores(static_cast<Eigen::Index>(order[half]))
                             : (view.scores(static_cast<Eigen::Index>(order[half - 1])) +
                                view.scores(static_cast<Eigen::Index>(order[half]))) / 2.0;

  const auto z = standardize(view.features);
  for (Eigen::Index c = 0; c < z.values.cols(); ++c) {
    double low = 0.0;
    double high = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      low += z.values(static_cast<Eigen::Index>(order[i]), c);
      high += z.values(static_cast<Eigen::Index>(order[n - 1 - i]), c);
    }
    QualitativeRow row;
    row.feature = std::string(features::kFeatureNames[static_cast<std::size_t>(c)]);
    row.low_group_z = low / static_cast<double>(half);
    row.high_group_z = high / static_cast<double>(half);
    row.low = label_for_z(row.low_group_z);
    row.high = label_for_z(row.high_group_z);
    table.rows.push_back(std::move(row));
  }
  return table;
}

QualitativeTable qualitative_labels(const indices::JoinedDataset& joined, std::string_view index_name) {
  return qualitative_labels(joined.view(index_name));
}

CorrelationReport correlate(const indices::JoinedDataset& joined) {
  CorrelationReport report;
  for (auto name : features::kFeatureNames) report.feature_names.emplace_back(name);
  report.index_names = joined.index_names();
  const auto nf = static_cast<Eigen::Index>(features::kFeatureCount);
  const auto ni = static_cast<Eigen::Index>(joined.views.size());
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  report.pearson = Eigen::MatrixXd::Constant(nf, ni, nan);
  report.spearman = Eigen::MatrixXd::Constant(nf, ni, nan);

  for (Eigen::Index j = 0; j < ni; ++j) {
    const auto& view = joined.views[static_cast<std::size_t>(j)];
    report.sample_sizes.push_back(view.countries.size());
    for (Eigen::Index f = 0; f < nf; ++f) {
      const std::string pair = report.feature_names[static_cast<std::size_t>(f)] + "/" + view.index_name;
      if (view.scores.size() < 3) {
        report.undefined.push_back(pair);
        continue;
      }
      try {
        report.pearson(f, j) = pearson(view.features.col(f), view.scores);
        report.spearman(f, j) = spearman(view.features.col(f), view.scores);
      } catch (const UndefinedCorrelation&) {
        report.undefined.push_back(pair);
      }
    }
    if (view.countries.size() >= 4) report.qualitative.push_back(qualitative_labels(view));
  }
  return report;
}

}  // namespace anthem::analysis
