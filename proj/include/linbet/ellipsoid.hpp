#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "linbet/errors.hpp"
#include "linbet/linalg.hpp"

namespace linbet {

/// {theta : ||theta - center||_V <= radius}. Holds its own copy of V and V^{-1}.
struct ConfidenceEllipsoid {
  Vector center;
  double radius = 0.0;
  Matrix metric;          ///< V
  Matrix metric_inverse;  ///< V^{-1}

  /// B(0, S) seen through V_0 = lambda I: center 0, radius sqrt(lambda) * S.
  static ConfidenceEllipsoid initial(const DesignState& design, double S) {
    return {Vector::Zero(static_cast<Eigen::Index>(design.dim())), std::sqrt(design.lambda()) * S, design.V(),
            design.V_inv()};
  }

  static ConfidenceEllipsoid from(const DesignState& design, Vector center, double radius) {
    return {std::move(center), radius, design.V(), design.V_inv()};
  }

  double distance(const Vector& theta) const { return weighted_norm(metric, theta - center); }
  bool contains(const Vector& theta) const { return distance(theta) <= radius; }
};

/// max over the ellipsoid of <x, theta> = x^T center + radius * ||x||_{V^{-1}}, per arm column.
inline Vector optimistic_values(const ConfidenceEllipsoid& ell, const Matrix& arms) {
  Vector values = arms.transpose() * ell.center;
  const Matrix W = ell.metric_inverse * arms;
  for (Eigen::Index a = 0; a < arms.cols(); ++a) {
    const double q = arms.col(a).dot(W.col(a));
    values(a) += ell.radius * std::sqrt(std::max(q, 0.0));
  }
  return values;
}

/// Maximizer theta~ = center + radius * V^{-1} x / ||x||_{V^{-1}}; center itself for x = 0.
inline Vector optimistic_parameter(const ConfidenceEllipsoid& ell, const Vector& x) {
  const Vector w = ell.metric_inverse * x;
  const double n = std::sqrt(std::max(x.dot(w), 0.0));
  if (n == 0.0) return ell.center;
  return ell.center + ell.radius * w / n;
}

/// Optimistic arm, lowest index on ties.
inline std::size_t select_optimistic_arm(const ConfidenceEllipsoid& ell, const Matrix& arms) {
  if (arms.cols() == 0) throw InvalidInput("select_optimistic_arm: empty arm set");
  const Vector values = optimistic_values(ell, arms);
  std::size_t best = 0;
  for (Eigen::Index a = 1; a < values.size(); ++a)
    if (values(a) > values(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(a);
  return best;
}

struct MedianSelection {
  std::size_t index = 0;
  std::vector<double> radii;  ///< r_j for every candidate
};

/// Median-of-means selection over candidate estimates (columns of `estimates`):
/// r_j is the lower median (the ceil((k-1)/2)-th smallest) of the V-distances
/// from estimate j to every other estimate; returns argmin r_j, lowest j on ties.
inline MedianSelection select_median_estimate(const Matrix& estimates, const Matrix& V) {
  const auto k = static_cast<std::size_t>(estimates.cols());
  if (k == 0) throw InvalidInput("select_median_estimate: no estimates");
  MedianSelection sel;
  sel.radii.assign(k, 0.0);
  if (k == 1) return sel;

  Eigen::LLT<Matrix> llt(V);
  if (llt.info() != Eigen::Success) throw InternalError("select_median_estimate: metric is not SPD");
  // ||a - b||_V = ||L^T (a - b)||_2
  const Matrix Z = llt.matrixU() * estimates;
  const std::size_t rank = k / 2 - 1;  // 0-based position of the ceil((k-1)/2)-th smallest
  std::vector<double> dist(k - 1);
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t n = 0;
    for (std::size_t s = 0; s < k; ++s) {
      if (s == j) continue;
      dist[n++] = (Z.col(static_cast<Eigen::Index>(j)) - Z.col(static_cast<Eigen::Index>(s))).norm();
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(rank), dist.end());
    sel.radii[j] = dist[rank];
  }
  for (std::size_t j = 1; j < k; ++j)
    if (sel.radii[j] < sel.radii[sel.index]) sel.index = j;
  return sel;
}

/// Lower median (the ceil(n/2)-th smallest) of a list of values.
inline double lower_median(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("lower_median: empty input");
  const std::size_t rank = (values.size() + 1) / 2 - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank), values.end());
  return values[rank];
}

}  // namespace linbet
