#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "anthem/analysis/standardize.hpp"
#include "anthem/error.hpp"

namespace anthem::analysis {

namespace detail {

template <typename DerivedX, typename DerivedY>
void check_pair(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  if (x.size() != y.size()) throw Error("correlation: length mismatch");
  if (x.size() < 3) throw Error("correlation: need at least 3 observations");
}

}  // namespace detail

/// Product-moment correlation. Throws UndefinedCorrelation when either input
/// is constant.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar pearson(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  detail::check_pair(x, y);
  const Scalar mx = x.mean();
  const Scalar my = y.mean();
  const auto dx = (x.array() - mx).eval();
  const auto dy = (y.array() - my).eval();
  const Scalar sxx = dx.square().sum();
  const Scalar syy = dy.square().sum();
  using std::sqrt;
  if (is_constant_spread(sqrt(sxx / Scalar(x.size())), mx) || is_constant_spread(sqrt(syy / Scalar(y.size())), my)) {
    throw UndefinedCorrelation("correlation undefined for constant input");
  }
  const Scalar r = (dx * dy).sum() / sqrt(sxx * syy);
  return std::clamp(r, Scalar(-1), Scalar(1));
}

/// 1-based ranks; tied values share the mean of their positions.
template <typename Derived>
Vector<typename Derived::Scalar> mid_ranks(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  Vector<Scalar> ranks(n);
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && v(order[static_cast<std::size_t>(j + 1)]) == v(order[static_cast<std::size_t>(i)])) ++j;
    const Scalar rank = Scalar(i + j + 2) / Scalar(2);
    for (Eigen::Index t = i; t <= j; ++t) ranks(order[static_cast<std::size_t>(t)]) = rank;
    i = j + 1;
  }
  return ranks;
}

/// Pearson correlation of mid-ranks.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar spearman(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  detail::check_pair(x, y);
  return pearson(mid_ranks(x), mid_ranks(y));
}

}  // namespace anthem::analysis
