#pragma once

// Model selection for k: silhouette decides, the elbow is reported alongside.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "anthem/analysis/kmeans.hpp"
#include "anthem/error.hpp"

namespace anthem::analysis {

/// Per-point silhouette values with Euclidean distance. Points in singleton
/// clusters score 0. Throws when fewer than two clusters are present.
template <typename Derived>
std::vector<typename Derived::Scalar> silhouette_samples(const Eigen::MatrixBase<Derived>& data,
                                                         const std::vector<int>& labels) {
  using Scalar = typename Derived::Scalar;
  if (static_cast<Eigen::Index>(labels.size()) != data.rows()) throw Error("silhouette: label count mismatch");
  std::map<int, std::vector<Eigen::Index>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<Eigen::Index>(i));
  if (members.size() < 2) throw Error("silhouette: need at least 2 clusters");

  std::vector<Scalar> s(labels.size(), Scalar(0));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const int own = labels[static_cast<std::size_t>(i)];
    if (members[own].size() == 1) continue;
    Scalar a = 0;
    Scalar b = std::numeric_limits<Scalar>::infinity();
    for (const auto& [label, rows] : members) {
      Scalar sum = 0;
      for (auto j : rows) sum += (data.row(i) - data.row(j)).norm();
      if (label == own) {
        a = sum / Scalar(rows.size() - 1);
      } else {
        b = std::min(b, sum / Scalar(rows.size()));
      }
    }
    const Scalar denom = std::max(a, b);
    s[static_cast<std::size_t>(i)] = denom > Scalar(0) ? (b - a) / denom : Scalar(0);
  }
  return s;
}

template <typename Derived>
typename Derived::Scalar silhouette_score(const Eigen::MatrixBase<Derived>& data, const std::vector<int>& labels) {
  using Scalar = typename Derived::Scalar;
  const auto s = silhouette_samples(data, labels);
  Scalar sum = 0;
  for (auto v : s) sum += v;
  return sum / Scalar(s.size());
}

/// k at the largest second difference of the inertia curve over interior k;
/// ties go to the smaller k. Needs consecutive k starting at 1 up to >= 3.
template <typename Scalar>
int elbow_k(const std::map<int, Scalar>& inertias) {
  if (inertias.size() < 3) throw Error("elbow: need inertias for at least k = 1..3");
  int expected = inertias.begin()->first;
  if (expected != 1) throw Error("elbow: inertia curve must start at k = 1");
  for (const auto& [k, _] : inertias) {
    if (k != expected++) throw Error("elbow: non-consecutive k range");
  }
  int best_k = 0;
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  const int k_max = inertias.rbegin()->first;
  for (int k = 2; k < k_max; ++k) {
    const Scalar second = inertias.at(k - 1) - Scalar(2) * inertias.at(k) + inertias.at(k + 1);
    if (second > best) {
      best = second;
      best_k = k;
    }
  }
  return best_k;
}

/// Largest finite silhouette; ties go to the smaller k. Returns 0 when none is finite.
template <typename Scalar>
int argmax_silhouette(const std::map<int, Scalar>& silhouettes) {
  int best_k = 0;
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  for (const auto& [k, s] : silhouettes) {
    if (std::isfinite(s) && s > best) {
      best = s;
      best_k = k;
    }
  }
  return best_k;
}

template <typename Scalar>
struct KSelection {
  int k = 1;
  int elbow_k = 0;
  std::map<int, Scalar> inertia;     // k = 1..k_max
  std::map<int, Scalar> silhouette;  // k = 2..k_max; NaN when fewer than two clusters came out non-empty
  ClusterModel<Scalar> model;        // fit at the chosen k
  std::uint64_t seed = 0;
};

/// Fits k = 1..k_max with the same seed and picks the silhouette maximum.
/// When no k >= 2 yields two non-empty clusters (e.g. all rows identical) the
/// result is k = 1.
template <typename Derived>
KSelection<typename Derived::Scalar> select_k(const Eigen::MatrixBase<Derived>& data, int k_max, std::uint64_t seed,
                                              const KMeansOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  if (k_max < 3) throw Error("select_k: k_max must be at least 3");
  if (k_max > data.rows()) {
    throw Error("select_k: k_max = " + std::to_string(k_max) + " exceeds row count " + std::to_string(data.rows()));
  }
  KSelection<Scalar> result;
  result.seed = seed;
  std::map<int, ClusterModel<Scalar>> models;
  for (int k = 1; k <= k_max; ++k) {
    auto model = kmeans_fit(data, k, seed, options);
    result.inertia[k] = model.inertia;
    if (k >= 2) {
      const std::set<int> present(model.assignments.begin(), model.assignments.end());
      result.silhouette[k] = present.size() >= 2 ? silhouette_score(data, model.assignments)
                                                 : std::numeric_limits<Scalar>::quiet_NaN();
    }
    models.emplace(k, std::move(model));
  }
  result.elbow_k = elbow_k(result.inertia);
  const int chosen = argmax_silhouette(result.silhouette);
  result.k = chosen > 0 ? chosen : 1;
  result.model = std::move(models.at(result.k));
  return result;
}

template <typename Scalar>
KSelection<Scalar> select_k(const StandardizedMatrix<Scalar>& data, int k_max, std::uint64_t seed,
                            const KMeansOptions& options = {}) {
  return select_k(data.values, k_max, seed, options);
}

}  // namespace anthem::analysis
