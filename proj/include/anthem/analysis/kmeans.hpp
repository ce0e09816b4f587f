#pragma once

// Seeded k-means: k-means++ seeding followed by Lloyd iterations.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "anthem/analysis/standardize.hpp"
#include "anthem/error.hpp"

namespace anthem::analysis {

struct KMeansOptions {
  int max_iterations = 300;
  /// Independent k-means++ starts drawn from one seeded stream; the lowest
  /// final inertia wins, earliest start on ties.
  int restarts = 10;
};

template <typename Scalar>
struct ClusterModel {
  int k = 1;
  Matrix<Scalar> centroids;      // k x d
  std::vector<int> assignments;  // row -> cluster id in [0, k)
  Scalar inertia = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  std::vector<Scalar> inertia_history;  // after every assignment step of the kept start
};

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename Scalar>
struct Assignment {
  std::vector<int> labels;
  std::vector<Scalar> distances;  // squared distance to assigned centroid
};

template <typename Derived, typename Scalar>
Assignment<Scalar> assign_nearest(const Eigen::MatrixBase<Derived>& data, const Matrix<Scalar>& centroids) {
  Assignment<Scalar> a;
  const auto n = static_cast<std::size_t>(data.rows());
  a.labels.assign(n, 0);
  a.distances.assign(n, Scalar(0));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    int best_id = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const Scalar d = (data.row(i) - centroids.row(c)).squaredNorm();
      if (d < best) {  // strict: ties keep the lower id
        best = d;
        best_id = static_cast<int>(c);
      }
    }
    a.labels[static_cast<std::size_t>(i)] = best_id;
    a.distances[static_cast<std::size_t>(i)] = best;
  }
  return a;
}

template <typename Derived>
Matrix<typename Derived::Scalar> plus_plus_seeds(const Eigen::MatrixBase<Derived>& data, int k,
                                                 std::mt19937_64& rng) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = data.rows();
  Matrix<Scalar> centroids(k, data.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);

  auto pick_uniform = [&]() {
    auto idx = static_cast<Eigen::Index>(unit_uniform(rng) * static_cast<double>(n));
    return std::min(idx, n - 1);
  };
  Eigen::Index first = pick_uniform();
  centroids.row(0) = data.row(first);
  chosen[static_cast<std::size_t>(first)] = true;

  std::vector<Scalar> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = (data.row(i) - centroids.row(0)).squaredNorm();

  for (int c = 1; c < k; ++c) {
    Scalar total = 0;
    for (auto v : d2) total += v;
    Eigen::Index pick = -1;
    if (total > Scalar(0)) {
      const double target = unit_uniform(rng) * static_cast<double>(total);
      double cumulative = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto v = static_cast<double>(d2[static_cast<std::size_t>(i)]);
        if (v <= 0.0) continue;
        cumulative += v;
        pick = i;
        if (cumulative > target) break;
      }
    } else {
      // Every point coincides with a chosen centroid.
      for (Eigen::Index i = 0; i < n && pick < 0; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) pick = i;
      }
      if (pick < 0) pick = 0;
    }
    centroids.row(c) = data.row(pick);
    chosen[static_cast<std::size_t>(pick)] = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& d = d2[static_cast<std::size_t>(i)];
      d = std::min(d, Scalar((data.row(i) - centroids.row(c)).squaredNorm()));
    }
  }
  return centroids;
}

template <typename Derived>
ClusterModel<typename Derived::Scalar> lloyd(const Eigen::MatrixBase<Derived>& data, Matrix<typename Derived::Scalar> centroids,
                                             int max_iterations) {
  using Scalar = typename Derived::Scalar;
  const int k = static_cast<int>(centroids.rows());
  ClusterModel<Scalar> model;
  model.k = k;
  std::vector<int> previous;
  Assignment<Scalar> current;

  for (int iter = 0; iter < max_iterations; ++iter) {
    current = assign_nearest(data, centroids);

    // Empty cluster repair: move the centroid onto the point farthest from its own centroid.
    for (int guard = 0; guard < k; ++guard) {
      std::vector<int> sizes(static_cast<std::size_t>(k), 0);
      for (int l : current.labels) ++sizes[static_cast<std::size_t>(l)];
      const auto empty = std::find(sizes.begin(), sizes.end(), 0);
      if (empty == sizes.end()) break;
      std::size_t far = 0;
      for (std::size_t i = 1; i < current.distances.size(); ++i) {
        if (current.distances[i] > current.distances[far]) far = i;
      }
      if (!(current.distances[far] > Scalar(0))) break;  // duplicates only; cannot repair
      centroids.row(empty - sizes.begin()) = data.row(static_cast<Eigen::Index>(far));
      current = assign_nearest(data, centroids);
    }

    Scalar inertia = 0;
    for (auto d : current.distances) inertia += d;
    model.inertia_history.push_back(inertia);
    model.iterations = iter + 1;
    if (current.labels == previous) break;
    previous = current.labels;

    if (iter + 1 == max_iterations) break;
    Matrix<Scalar> sums = Matrix<Scalar>::Zero(k, data.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const int l = current.labels[static_cast<std::size_t>(i)];
      sums.row(l) += data.row(i);
      ++counts[static_cast<std::size_t>(l)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) centroids.row(c) = sums.row(c) / Scalar(counts[static_cast<std::size_t>(c)]);
    }
  }

  model.centroids = std::move(centroids);
  model.assignments = std::move(current.labels);
  model.inertia = model.inertia_history.back();
  return model;
}

}  // namespace detail

/// Deterministic for identical (data, k, seed, options). Throws when k is
/// outside [1, rows].
template <typename Derived>
ClusterModel<typename Derived::Scalar> kmeans_fit(const Eigen::MatrixBase<Derived>& data, int k, std::uint64_t seed,
                                                  const KMeansOptions& options = {}) {
  if (k < 1) throw Error("kmeans: k must be at least 1");
  if (k > data.rows()) {
    throw Error("kmeans: k = " + std::to_string(k) + " exceeds row count " + std::to_string(data.rows()));
  }
  std::mt19937_64 rng(seed);
  ClusterModel<typename Derived::Scalar> best;
  bool have_best = false;
  for (int start = 0; start < std::max(1, options.restarts); ++start) {
    auto model = detail::lloyd(data, detail::plus_plus_seeds(data, k, rng), std::max(1, options.max_iterations));
    if (!have_best || model.inertia < best.inertia) {
      best = std::move(model);
      have_best = true;
    }
  }
  best.seed = seed;
  return best;
}

template <typename Scalar>
ClusterModel<Scalar> kmeans_fit(const StandardizedMatrix<Scalar>& data, int k, std::uint64_t seed,
                                const KMeansOptions& options = {}) {
  return kmeans_fit(data.values, k, seed, options);
}

}  // namespace anthem::analysis
