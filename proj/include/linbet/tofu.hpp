#pragma once

// Truncation under OFU. Every round re-truncates the whole payoff history,
// separately for each coordinate of V^{-1/2} X^T, and rebuilds the estimate
// from the surviving terms. O(d^2 t) per round, O(t) storage.

#include <cmath>
#include <cstddef>
#include <string>

#include "linbet/ellipsoid.hpp"
#include "linbet/errors.hpp"
#include "linbet/linalg.hpp"

namespace linbet {

/// `Proof` keeps |u y| <= b_t with b_t = (b / log(2dT/delta))^{1/(1+eps)} t^{(1-eps)/(2(1+eps))}.
/// `Literal` keeps u y <= b_t with b_t = (b / log(2T/delta))^{1/eps} t^{(1-eps)/(2(1+eps))}.
enum class TruncationConvention { Proof, Literal };

inline std::string to_string(TruncationConvention c) { return c == TruncationConvention::Proof ? "proof" : "literal"; }

inline TruncationConvention parse_truncation_convention(std::string_view s) {
  if (s == "proof") return TruncationConvention::Proof;
  if (s == "literal" || s == "algorithm-line-4") return TruncationConvention::Literal;
  throw ConfigError("unknown truncation convention '" + std::string(s) + "' (expected proof or literal)");
}

struct TofuParams {
  std::size_t d = 1;
  double b = 1.0;  ///< raw (1+eps)-moment bound
  double epsilon = 1.0;
  double delta = 0.1;
  double lambda = 1.0;
  double S = 1.0;
  std::size_t T = 1;
  TruncationConvention convention = TruncationConvention::Proof;
};

inline double tofu_threshold(const TofuParams& p, std::size_t t) {
  const double e = p.epsilon;
  const double growth = std::pow(static_cast<double>(t), (1.0 - e) / (2.0 * (1.0 + e)));
  const double T = static_cast<double>(p.T);
  if (p.convention == TruncationConvention::Proof)
    return std::pow(p.b / std::log(2.0 * static_cast<double>(p.d) * T / p.delta), 1.0 / (1.0 + e)) * growth;
  return std::pow(p.b / std::log(2.0 * T / p.delta), 1.0 / e) * growth;
}

/// beta_t = 4 sqrt(d) b^{1/(1+eps)} log(2dT/delta)^{eps/(1+eps)} t^{(1-eps)/(2(1+eps))} + sqrt(lambda) S.
inline double tofu_radius(const TofuParams& p, std::size_t t) {
  const double e = p.epsilon;
  const double d = static_cast<double>(p.d);
  return 4.0 * std::sqrt(d) * std::pow(p.b, 1.0 / (1.0 + e)) *
             std::pow(std::log(2.0 * d * static_cast<double>(p.T) / p.delta), e / (1.0 + e)) *
             std::pow(static_cast<double>(t), (1.0 - e) / (2.0 * (1.0 + e))) +
         std::sqrt(p.lambda) * p.S;
}

struct TruncatedEstimate {
  Vector theta;
  std::size_t clipped = 0;  ///< number of (i, tau) terms zeroed
};

/// theta^dagger = V^{-1/2} (u_1^T Y_1^dagger, ..., u_d^T Y_d^dagger) for history X (d x t), payoffs y.
/// `weights` is scratch space for the d x t weight rows.
inline TruncatedEstimate truncated_estimate(const DesignState& design, const Eigen::Ref<const Matrix>& X,
                                            const Eigen::Ref<const Vector>& y, double threshold,
                                            TruncationConvention convention, Matrix& weights) {
  const Eigen::Index t = X.cols();
  if (static_cast<std::size_t>(t) != design.count() || y.size() != t)
    throw InvalidInput("truncated_estimate: history length mismatch");
  const Matrix M = inv_sqrt(design);
  if (weights.rows() != X.rows() || weights.cols() < t) weights.resize(X.rows(), std::max<Eigen::Index>(t, 1));
  auto U = weights.leftCols(t);
  U.noalias() = M * X;
  U.array().rowwise() *= y.transpose().array();  // now u_{i,tau} y_tau
  TruncatedEstimate out;
  Vector z = Vector::Zero(X.rows());
  for (Eigen::Index tau = 0; tau < t; ++tau) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double v = U(i, tau);
      const bool keep = convention == TruncationConvention::Proof ? std::abs(v) <= threshold : v <= threshold;
      if (keep) z(i) += v;
      else ++out.clipped;
    }
  }
  out.theta = M * z;
  return out;
}

class TofuState {
 public:
  explicit TofuState(TofuParams params) : params_(params), design_(params.d, params.lambda) {
    if (!(params_.epsilon > 0.0 && params_.epsilon <= 1.0)) throw ConfigError("TOFU: epsilon must lie in (0, 1]");
    if (!(params_.b > 0.0)) throw ConfigError("TOFU: moment bound must be positive");
    const auto d = static_cast<Eigen::Index>(params_.d);
    const auto cap = static_cast<Eigen::Index>(std::max<std::size_t>(params_.T, 1));
    X_.resize(d, cap);
    y_.resize(cap);
    ellipsoid_ = ConfidenceEllipsoid::initial(design_, params_.S);
  }

  const TofuParams& params() const noexcept { return params_; }
  std::size_t t() const noexcept { return design_.count(); }
  const DesignState& design() const noexcept { return design_; }
  auto history_arms() const { return X_.leftCols(static_cast<Eigen::Index>(t())); }
  auto history_payoffs() const { return y_.head(static_cast<Eigen::Index>(t())); }
  const ConfidenceEllipsoid& ellipsoid() const noexcept { return ellipsoid_; }
  std::size_t last_clipped() const noexcept { return last_clipped_; }

  std::size_t select(const Matrix& arms) const { return select_optimistic_arm(ellipsoid_, arms); }

  void update(const Vector& x, double payoff) {
    if (!std::isfinite(payoff)) throw InvalidInput("tofu_update: non-finite payoff");
    if (x.size() != static_cast<Eigen::Index>(params_.d)) throw InvalidInput("tofu_update: arm dimension mismatch");
    const auto n = static_cast<Eigen::Index>(t());
    if (n == X_.cols()) {
      X_.conservativeResize(Eigen::NoChange, 2 * n);
      y_.conservativeResize(2 * n);
    }
    design_.update(x);
    X_.col(n) = x;
    y_(n) = payoff;
    const std::size_t now = t();
    const auto est = truncated_estimate(design_, X_.leftCols(n + 1), y_.head(n + 1), tofu_threshold(params_, now),
                                        params_.convention, weights_);
    last_clipped_ = est.clipped;
    ellipsoid_ = ConfidenceEllipsoid::from(design_, est.theta, tofu_radius(params_, now));
  }

  /// Whether theta* lies in the current confidence region. Test-only.
  bool certify(const Vector& theta_star) const { return ellipsoid_.contains(theta_star); }

 private:
  TofuParams params_;
  DesignState design_;
  Matrix X_;
  Vector y_;
  Matrix weights_;
  std::size_t last_clipped_ = 0;
  ConfidenceEllipsoid ellipsoid_;
};

}  // namespace linbet
