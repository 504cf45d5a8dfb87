#pragma once

// Median of means under OFU. Each epoch plays one arm k times, keeps k
// independent ridge estimates (one per pull index) and reports the estimate
// whose median V-distance to the others is smallest.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>

#include "linbet/ellipsoid.hpp"
#include "linbet/errors.hpp"
#include "linbet/linalg.hpp"

namespace linbet {

struct MenuSchedule {
  std::size_t k = 0;  ///< pulls per epoch (= number of estimates)
  std::size_t N = 0;  ///< epochs
};

/// k = ceil(24 log(e T / delta)), N = floor(T / k).
inline MenuSchedule menu_schedule(std::size_t T, double delta) {
  if (T == 0) throw ConfigError("MENU: horizon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("MENU: delta must lie in (0, 1)");
  const double k = std::ceil(24.0 * std::log(std::numbers::e * static_cast<double>(T) / delta));
  MenuSchedule s;
  s.k = static_cast<std::size_t>(k);
  s.N = T / s.k;
  return s;
}

/// Smallest horizon covered by the regret guarantee: 256 + 24 log(e / delta).
inline double menu_min_horizon(double delta) { return 256.0 + 24.0 * std::log(std::numbers::e / delta); }

inline void check_menu_horizon(std::size_t T, double delta) {
  if (static_cast<double>(T) < menu_min_horizon(delta))
    throw ConfigError("MENU needs T >= 256 + 24 log(e/delta) = " + std::to_string(menu_min_horizon(delta)) +
                      " (got T = " + std::to_string(T) + ")");
}

struct MenuParams {
  std::size_t d = 1;
  double c = 1.0;        ///< central (1+eps)-moment bound
  double epsilon = 1.0;
  double delta = 0.1;
  double lambda = 1.0;
  double S = 1.0;
  std::size_t T = 1;
  std::optional<std::size_t> groups;  ///< overrides k when set
  double confidence_constant = 9.0;   ///< the 9 in (9dc)^{1/(1+eps)}
};

/// beta_n = 3 ((9 d c)^{1/(1+eps)} n^{(1-eps)/(2(1+eps))} + sqrt(lambda) S).
inline double menu_radius(const MenuParams& p, std::size_t n) {
  const double e = p.epsilon;
  return 3.0 * (std::pow(p.confidence_constant * static_cast<double>(p.d) * p.c, 1.0 / (1.0 + e)) *
                    std::pow(static_cast<double>(n), (1.0 - e) / (2.0 * (1.0 + e))) +
                std::sqrt(p.lambda) * p.S);
}

class MenuState {
 public:
  explicit MenuState(MenuParams params) : params_(params), design_(params.d, params.lambda) {
    if (!(params_.epsilon > 0.0 && params_.epsilon <= 1.0)) throw ConfigError("MENU: epsilon must lie in (0, 1]");
    if (!(params_.c >= 0.0)) throw ConfigError("MENU: moment bound must be nonnegative");
    if (params_.groups) {
      if (*params_.groups == 0) throw ConfigError("MENU: group count must be positive");
      schedule_ = {*params_.groups, params_.T / *params_.groups};
    } else {
      schedule_ = menu_schedule(params_.T, params_.delta);
    }
    if (schedule_.N == 0) throw ConfigError("MENU: horizon shorter than one epoch");
    group_sums_ = Matrix::Zero(static_cast<Eigen::Index>(params_.d), static_cast<Eigen::Index>(schedule_.k));
    estimates_ = group_sums_;
    ellipsoid_ = ConfidenceEllipsoid::initial(design_, params_.S);
  }

  const MenuParams& params() const noexcept { return params_; }
  std::size_t k() const noexcept { return schedule_.k; }
  std::size_t N() const noexcept { return schedule_.N; }
  std::size_t epoch() const noexcept { return epoch_; }
  const DesignState& design() const noexcept { return design_; }
  const Matrix& group_sums() const noexcept { return group_sums_; }
  /// theta_hat_{n,j} as columns.
  const Matrix& estimates() const noexcept { return estimates_; }
  std::size_t selected_group() const noexcept { return selected_; }
  const ConfidenceEllipsoid& ellipsoid() const noexcept { return ellipsoid_; }

  std::size_t select(const Matrix& arms) const { return select_optimistic_arm(ellipsoid_, arms); }

  /// Folds one epoch: the arm `x` was played k times and returned `payoffs`.
  void update(const Vector& x, std::span<const double> payoffs) {
    if (payoffs.size() != schedule_.k)
      throw InvalidInput("menu_update: expected " + std::to_string(schedule_.k) + " payoffs, got " +
                         std::to_string(payoffs.size()));
    const Eigen::Map<const Vector> y(payoffs.data(), static_cast<Eigen::Index>(payoffs.size()));
    if (!all_finite(y)) throw InvalidInput("menu_update: non-finite payoff");

    design_.update(x);
    ++epoch_;
    group_sums_.noalias() += x * y.transpose();
    estimates_.noalias() = design_.V_inv() * group_sums_;
    const MedianSelection sel = select_median_estimate(estimates_, design_.V());
    selected_ = sel.index;
    ellipsoid_ = ConfidenceEllipsoid::from(design_, estimates_.col(static_cast<Eigen::Index>(selected_)),
                                           menu_radius(params_, epoch_));
  }

  /// Whether theta* lies in the current confidence region. Test-only.
  bool certify(const Vector& theta_star) const { return ellipsoid_.contains(theta_star); }

 private:
  MenuParams params_;
  MenuSchedule schedule_;
  DesignState design_;
  Matrix group_sums_;
  Matrix estimates_;
  std::size_t epoch_ = 0;
  std::size_t selected_ = 0;
  ConfidenceEllipsoid ellipsoid_;
};

}  // namespace linbet
