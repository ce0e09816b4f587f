#pragma once

// Feature-index correlation matrices and Low/High qualitative tables.

#include <Eigen/Dense>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "anthem/analysis/agreement.hpp"
#include "anthem/indices.hpp"

namespace anthem::analysis {

enum class Label { kVeryLow, kLow, kSlightlyLow, kAverage, kSlightlyHigh, kHigh, kVeryHigh };

std::string_view to_string(Label label);

/// Bands on a group-mean z-score: |z| < 0.15 average, < 0.5 slightly, < 1 plain, else very.
Label label_for_z(double z);

struct QualitativeRow {
  std::string feature;
  double low_group_z = 0.0;
  double high_group_z = 0.0;
  Label low = Label::kAverage;
  Label high = Label::kAverage;
};

/// Countries split at the median index score; each row labels the mean
/// standardized feature of the low-score and high-score halves. With an odd
/// count the median country belongs to neither half.
struct QualitativeTable {
  std::string index_name;
  indices::Direction direction = indices::Direction::kHigherIsBetter;
  std::size_t low_count = 0;
  std::size_t high_count = 0;
  double median_score = 0.0;
  std::vector<QualitativeRow> rows;  // kFeatureNames order
};

/// Throws DataError with fewer than 4 countries.
QualitativeTable qualitative_labels(const indices::IndexJoin& view);
QualitativeTable qualitative_labels(const indices::JoinedDataset& joined, std::string_view index_name);

struct CorrelationReport {
  std::vector<std::string> feature_names;
  std::vector<std::string> index_names;
  std::vector<std::size_t> sample_sizes;  // joined countries per index
  Eigen::MatrixXd pearson;   // features x indices; NaN where undefined
  Eigen::MatrixXd spearman;  // same shape
  std::vector<std::string> undefined;  // "feature/index" pairs with a constant input
  std::map<std::string, Agreement> cluster_agreement;  // by index name
  std::vector<QualitativeTable> qualitative;
};

/// Correlates every feature with every index over that index's joined
/// countries and builds the qualitative table for each index with >= 4 countries.
CorrelationReport correlate(const indices::JoinedDataset& joined);

}  // namespace anthem::analysis
