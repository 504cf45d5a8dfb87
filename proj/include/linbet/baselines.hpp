#pragma once

// Reconstructions of the two earlier heavy-tailed linear bandit policies:
//   MoM - play each chosen arm k_m times, summarize the pulls by a median of
//         group means, and run a single ridge regression on the summaries.
//   CRT - truncate each payoff once, at observation time, at a level that
//         depends only on t, then run ordinary ridge regression.
// Only their regret orders are published; the constants below are knobs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "linbet/ellipsoid.hpp"
#include "linbet/errors.hpp"
#include "linbet/linalg.hpp"

namespace linbet {

struct MomSchedule {
  std::size_t N = 0;  ///< epochs, ceil(T^{2eps/(1+3eps)})
  std::size_t k = 0;  ///< pulls per epoch, floor(T / N)
};

inline MomSchedule mom_schedule(std::size_t T, double epsilon) {
  if (T == 0) throw ConfigError("MoM: horizon must be positive");
  MomSchedule s;
  s.N = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(T), 2.0 * epsilon / (1.0 + 3.0 * epsilon))));
  s.N = std::clamp<std::size_t>(s.N, 1, T);
  s.k = T / s.N;
  return s;
}

struct MomParams {
  std::size_t d = 1;
  double c = 1.0;
  double epsilon = 1.0;
  double delta = 0.1;
  double lambda = 1.0;
  double S = 1.0;
  std::size_t T = 1;
  std::optional<std::size_t> groups;  ///< m; default min(k_m, ceil(8 log(T/delta)))
  double radius_constant = 1.0;       ///< C_mom
};

inline std::size_t mom_group_count(const MomParams& p, std::size_t k_m) {
  if (p.groups) return std::clamp<std::size_t>(*p.groups, 1, k_m);
  const auto m = static_cast<std::size_t>(std::ceil(8.0 * std::log(static_cast<double>(p.T) / p.delta)));
  return std::clamp<std::size_t>(m, 1, k_m);
}

/// Lower median of the means of m consecutive groups of floor(n/m) payoffs; the remainder is dropped.
inline double median_of_group_means(std::span<const double> payoffs, std::size_t m) {
  if (m == 0 || payoffs.size() < m) throw InvalidInput("median_of_group_means: need at least one payoff per group");
  const std::size_t size = payoffs.size() / m;
  std::vector<double> means(m);
  for (std::size_t g = 0; g < m; ++g) {
    double s = 0.0;
    for (std::size_t i = 0; i < size; ++i) s += payoffs[g * size + i];
    means[g] = s / static_cast<double>(size);
  }
  return lower_median(std::move(means));
}

/// C_mom (12c)^{1/(1+eps)} (m/k_m)^{eps/(1+eps)} sqrt(n) + sqrt(lambda) S.
inline double mom_radius(const MomParams& p, std::size_t m, std::size_t k_m, std::size_t n) {
  const double e = p.epsilon;
  return p.radius_constant * std::pow(12.0 * p.c, 1.0 / (1.0 + e)) *
             std::pow(static_cast<double>(m) / static_cast<double>(k_m), e / (1.0 + e)) *
             std::sqrt(static_cast<double>(n)) +
         std::sqrt(p.lambda) * p.S;
}

class MomState {
 public:
  explicit MomState(MomParams params) : params_(params), design_(params.d, params.lambda) {
    if (!(params_.epsilon > 0.0 && params_.epsilon <= 1.0)) throw ConfigError("MoM: epsilon must lie in (0, 1]");
    schedule_ = mom_schedule(params_.T, params_.epsilon);
    m_ = mom_group_count(params_, schedule_.k);
    sums_ = Vector::Zero(static_cast<Eigen::Index>(params_.d));
    ellipsoid_ = ConfidenceEllipsoid::initial(design_, params_.S);
  }

  std::size_t N() const noexcept { return schedule_.N; }
  std::size_t k() const noexcept { return schedule_.k; }
  std::size_t groups() const noexcept { return m_; }
  std::size_t epoch() const noexcept { return design_.count(); }
  const DesignState& design() const noexcept { return design_; }
  /// l~_n of the latest epoch.
  double last_summary() const noexcept { return last_summary_; }
  const ConfidenceEllipsoid& ellipsoid() const noexcept { return ellipsoid_; }

  std::size_t select(const Matrix& arms) const { return select_optimistic_arm(ellipsoid_, arms); }

  void update(const Vector& x, std::span<const double> payoffs) {
    if (payoffs.size() != schedule_.k)
      throw InvalidInput("mom_update: expected " + std::to_string(schedule_.k) + " payoffs, got " +
                         std::to_string(payoffs.size()));
    for (double y : payoffs)
      if (!std::isfinite(y)) throw InvalidInput("mom_update: non-finite payoff");
    const double summary = median_of_group_means(payoffs, m_);
    last_summary_ = summary;
    design_.update(x);
    sums_ += summary * x;
    ellipsoid_ = ConfidenceEllipsoid::from(design_, ridge_solve(design_, sums_),
                                           mom_radius(params_, m_, schedule_.k, epoch()));
  }

 private:
  MomParams params_;
  MomSchedule schedule_;
  std::size_t m_ = 1;
  DesignState design_;
  Vector sums_;
  double last_summary_ = 0.0;
  ConfidenceEllipsoid ellipsoid_;
};

struct CrtParams {
  std::size_t d = 1;
  double b = 1.0;
  double epsilon = 1.0;
  double delta = 0.1;
  double lambda = 1.0;
  double S = 1.0;
  double D = 1.0;
  std::size_t T = 1;
  double radius_constant = 4.0;  ///< C_crt
};

/// B_t = (b t / log(2T/delta))^{1/(1+eps)}.
inline double crt_threshold(const CrtParams& p, std::size_t t) {
  return std::pow(p.b * static_cast<double>(t) / std::log(2.0 * static_cast<double>(p.T) / p.delta),
                  1.0 / (1.0 + p.epsilon));
}

inline double crt_radius(const CrtParams& p, std::size_t t) {
  const double e = p.epsilon;
  const double d = static_cast<double>(p.d);
  const double tt = static_cast<double>(t);
  return p.radius_constant * std::pow(p.b, 1.0 / (1.0 + e)) *
             std::pow(std::log(2.0 * static_cast<double>(p.T) / p.delta), e / (1.0 + e)) *
             std::pow(tt, (1.0 - e) / (2.0 * (1.0 + e))) *
             std::sqrt(std::log(1.0 + tt * p.D * p.D / (p.lambda * d)) * d) +
         std::sqrt(p.lambda) * p.S;
}

class CrtState {
 public:
  explicit CrtState(CrtParams params) : params_(params), design_(params.d, params.lambda) {
    if (!(params_.epsilon > 0.0 && params_.epsilon <= 1.0)) throw ConfigError("CRT: epsilon must lie in (0, 1]");
    if (!(params_.b > 0.0)) throw ConfigError("CRT: moment bound must be positive");
    sums_ = Vector::Zero(static_cast<Eigen::Index>(params_.d));
    ellipsoid_ = ConfidenceEllipsoid::initial(design_, params_.S);
  }

  std::size_t t() const noexcept { return design_.count(); }
  const DesignState& design() const noexcept { return design_; }
  /// Latest payoff as stored after its one-time truncation.
  double last_stored() const noexcept { return last_stored_; }
  double last_threshold() const noexcept { return last_threshold_; }
  const ConfidenceEllipsoid& ellipsoid() const noexcept { return ellipsoid_; }

  std::size_t select(const Matrix& arms) const { return select_optimistic_arm(ellipsoid_, arms); }

  void update(const Vector& x, double payoff) {
    if (!std::isfinite(payoff)) throw InvalidInput("crt_update: non-finite payoff");
    const std::size_t now = t() + 1;
    last_threshold_ = crt_threshold(params_, now);
    const double kept = std::abs(payoff) <= last_threshold_ ? payoff : 0.0;
    last_stored_ = kept;
    design_.update(x);
    sums_ += kept * x;
    ellipsoid_ = ConfidenceEllipsoid::from(design_, ridge_solve(design_, sums_), crt_radius(params_, now));
  }

 private:
  CrtParams params_;
  DesignState design_;
  Vector sums_;
  double last_stored_ = 0.0;
  double last_threshold_ = 0.0;
  ConfidenceEllipsoid ellipsoid_;
};

}  // namespace linbet
