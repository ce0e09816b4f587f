#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "anthem/error.hpp"

namespace anthem::analysis {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Column z-scores with the statistics needed to map back to raw units.
template <typename Scalar>
struct StandardizedMatrix {
  Matrix<Scalar> values;
  Vector<Scalar> column_means;
  Vector<Scalar> column_sds;           // population standard deviation
  std::vector<bool> constant_columns;  // z is all zeros for these

  Matrix<Scalar> to_raw(const Matrix<Scalar>& z) const {
    Matrix<Scalar> raw = z;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      raw.col(c) = (z.col(c).array() * column_sds(c) + column_means(c)).matrix();
    }
    return raw;
  }
};

/// A column is treated as constant when its spread is below rounding noise
/// relative to its magnitude.
template <typename Scalar>
bool is_constant_spread(Scalar sd, Scalar mean) {
  using std::abs;
  return !(sd > Scalar(64) * std::numeric_limits<Scalar>::epsilon() * std::max(Scalar(1), abs(mean)));
}

template <typename Derived>
StandardizedMatrix<typename Derived::Scalar> standardize(const Eigen::MatrixBase<Derived>& data) {
  using Scalar = typename Derived::Scalar;
  if (data.rows() < 2) throw Error("standardize: need at least 2 rows");

  StandardizedMatrix<Scalar> out;
  out.values.resize(data.rows(), data.cols());
  out.column_means = data.colwise().mean().transpose();
  out.column_sds.resize(data.cols());
  out.constant_columns.assign(static_cast<std::size_t>(data.cols()), false);
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const auto centered = (data.col(c).array() - out.column_means(c)).eval();
    using std::sqrt;
    const Scalar sd = sqrt(centered.square().mean());
    if (is_constant_spread(sd, out.column_means(c))) {
      out.column_sds(c) = Scalar(0);
      out.constant_columns[static_cast<std::size_t>(c)] = true;
      out.values.col(c).setZero();
    } else {
      out.column_sds(c) = sd;
      out.values.col(c) = (centered / sd).matrix();
    }
  }
  return out;
}

}  // namespace anthem::analysis
