#pragma once

// Comparing two partitions of the same country list.

#include <Eigen/Dense>
#include <vector>

namespace anthem::analysis {

struct Agreement {
  std::vector<int> row_labels;  // sorted distinct labels of the first partition
  std::vector<int> col_labels;
  Eigen::MatrixXi contingency;  // row_labels x col_labels counts
  double adjusted_rand = 0.0;
  double cramers_v = 0.0;
};

Eigen::MatrixXi contingency_table(const std::vector<int>& a, const std::vector<int>& b, std::vector<int>* row_labels = nullptr,
                                  std::vector<int>* col_labels = nullptr);

/// Two single-cluster partitions are identical and score 1.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

/// Chi-squared association normalized to [0, 1]; 0 when either side has one label.
double cramers_v(const std::vector<int>& a, const std::vector<int>& b);

/// Throws when lengths differ or are zero.
Agreement cluster_agreement(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace anthem::analysis
