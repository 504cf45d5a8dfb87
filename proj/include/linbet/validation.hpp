#pragma once

// Invariant and concentration checks. Each returns a CheckResult so the CLI
// `validate` command and the acceptance binary can print a pass/fail table.
// Sizes are parameters: `validate` runs them small, acceptance at full size.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "linbet/ellipsoid.hpp"
#include "linbet/environments.hpp"
#include "linbet/linalg.hpp"
#include "linbet/menu.hpp"
#include "linbet/policy.hpp"
#include "linbet/random.hpp"
#include "linbet/tofu.hpp"

namespace linbet {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline Vector gaussian_vector(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(d));
  for (auto& x : v) x = normal(rng);
  return v;
}

/// Uniform point in the unit Euclidean ball.
inline Vector unit_ball_point(std::size_t d, Rng& rng) {
  Vector v = gaussian_vector(d, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return v.normalized() * std::pow(unif(rng), 1.0 / static_cast<double>(d));
}

/// Random SPD matrix with eigenvalues in [lo, hi].
inline Matrix random_spd(std::size_t d, Rng& rng, double lo = 0.5, double hi = 20.0) {
  const auto n = static_cast<Eigen::Index>(d);
  Matrix G(n, n);
  for (Eigen::Index i = 0; i < n; ++i) G.col(i) = gaussian_vector(d, rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  const Matrix Q = qr.householderQ();
  std::uniform_real_distribution<double> unif(lo, hi);
  Vector ev(n);
  for (auto& e : ev) e = unif(rng);
  Matrix A = Q * ev.asDiagonal() * Q.transpose();
  return 0.5 * (A + A.transpose());
}

}  // namespace detail

/// ||u_i||_2 <= 1 and ||u_i||_{1+eps} <= t^{(1-eps)/(2(1+eps))} on random designs.
inline CheckResult check_weight_row_norms(std::size_t designs, const std::vector<std::size_t>& dims,
                                          std::size_t max_t, const std::vector<double>& epsilons,
                                          std::uint64_t seed) {
  detail::Stopwatch sw;
  Rng rng(derive_seed(seed, 1));
  std::uniform_int_distribution<std::size_t> pick_dim(0, dims.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_t(1, max_t);
  std::uniform_real_distribution<double> scale(0.01, 3.0);
  std::size_t violations = 0, rows_checked = 0;
  double worst_l2 = 0.0, worst_ratio = 0.0;
  for (std::size_t n = 0; n < designs; ++n) {
    const std::size_t d = dims[pick_dim(rng)];
    const std::size_t t = pick_t(rng);
    DesignState design(d, 1.0);
    Matrix X(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t));
    const double s = scale(rng);
    for (std::size_t tau = 0; tau < t; ++tau) {
      Vector x = detail::unit_ball_point(d, rng) * s;
      design.update(x);
      X.col(static_cast<Eigen::Index>(tau)) = x;
    }
    const WeightRows w = compute_weight_rows(design, X);
    for (Eigen::Index i = 0; i < w.rows.rows(); ++i) {
      ++rows_checked;
      const double l2 = w.rows.row(i).norm();
      worst_l2 = std::max(worst_l2, l2);
      if (l2 > 1.0 + 1e-9) ++violations;
      for (double eps : epsilons) {
        const double bound = weight_row_lp_bound(t, eps);
        const double lp = lp_norm(w.rows.row(i), 1.0 + eps);
        worst_ratio = std::max(worst_ratio, lp / bound);
        if (lp > bound + 1e-6) ++violations;
      }
    }
  }
  std::ostringstream os;
  os << rows_checked << " rows, max ||u||_2 = " << worst_l2 << ", max lp/bound = " << worst_ratio
     << ", violations = " << violations;
  return {"weight-row norms", violations == 0, os.str(), sw.seconds()};
}

/// With no truncation firing, theta^dagger equals the ridge estimate V^{-1} X^T y.
inline CheckResult check_noclip_identity(std::size_t histories, std::uint64_t seed) {
  detail::Stopwatch sw;
  Rng rng(derive_seed(seed, 2));
  std::uniform_int_distribution<std::size_t> pick_d(1, 8), pick_t(1, 120);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  std::size_t clipped_runs = 0;
  Matrix scratch;
  for (std::size_t h = 0; h < histories; ++h) {
    const std::size_t d = pick_d(rng), t = pick_t(rng);
    DesignState design(d, 1.0);
    Matrix X(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t));
    Vector y(static_cast<Eigen::Index>(t));
    for (std::size_t tau = 0; tau < t; ++tau) {
      Vector x = detail::unit_ball_point(d, rng);
      design.update(x);
      X.col(static_cast<Eigen::Index>(tau)) = x;
      y(static_cast<Eigen::Index>(tau)) = 3.0 * normal(rng);
    }
    // Threshold above every |u_{i,tau} y_tau|: no term is clipped.
    const double threshold = (y.cwiseAbs().maxCoeff() + 1.0) * 2.0;
    const auto est = truncated_estimate(design, X, y, threshold, TruncationConvention::Proof, scratch);
    if (est.clipped != 0) ++clipped_runs;
    const Vector ridge = ridge_solve(design, X * y);
    worst = std::max(worst, (est.theta - ridge).norm());
  }
  std::ostringstream os;
  os << histories << " histories, max ||theta_dagger - ridge||_2 = " << worst << ", runs with clipping = "
     << clipped_runs;
  return {"TOFU no-clip identity", worst <= 1e-8 && clipped_runs == 0, os.str(), sw.seconds()};
}

/// Deterministic geometry of the median-of-means step: if more than 2/3 of the
/// k estimates lie within V-distance gamma of theta*, the selected one lies within 3 gamma.
inline CheckResult check_median_of_means_ball(std::size_t configurations, const std::vector<std::size_t>& ks,
                                              std::uint64_t seed) {
  detail::Stopwatch sw;
  Rng rng(derive_seed(seed, 3));
  std::uniform_int_distribution<std::size_t> pick_k(0, ks.size() - 1), pick_d(1, 8);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t failures = 0;
  double worst_ratio = 0.0;
  for (std::size_t c = 0; c < configurations; ++c) {
    const std::size_t k = ks[pick_k(rng)];
    const std::size_t d = pick_d(rng);
    const Matrix V = detail::random_spd(d, rng);
    const Eigen::LLT<Matrix> llt(V);
    const Matrix Linv_T = llt.matrixU().solve(Matrix::Identity(V.rows(), V.cols()));  // maps unit ball into V-ball
    const Vector theta = detail::gaussian_vector(d, rng) * 3.0;
    const double gamma = 0.1 + unif(rng) * 5.0;
    // Strictly more than 2k/3 inside.
    const std::size_t inside = std::min(k, (2 * k) / 3 + 1 + static_cast<std::size_t>(unif(rng) * (k / 3.0)));
    Matrix est(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
    const int style = static_cast<int>(unif(rng) * 3.0);
    const Vector far_dir = detail::gaussian_vector(d, rng).normalized();
    for (std::size_t j = 0; j < k; ++j) {
      Vector e;
      if (j < inside) {
        e = theta + gamma * (Linv_T * detail::unit_ball_point(d, rng));
      } else if (style == 0) {
        // outliers scattered anywhere
        e = theta + gamma * (1.0 + 20.0 * unif(rng)) * (Linv_T * detail::gaussian_vector(d, rng).normalized());
      } else if (style == 1) {
        // outliers clustered tightly together just beyond 3 gamma
        e = theta + 3.05 * gamma * (Linv_T * far_dir) + 0.01 * gamma * (Linv_T * detail::unit_ball_point(d, rng));
      } else {
        // outliers clustered far away
        e = theta + 50.0 * gamma * (Linv_T * far_dir);
      }
      est.col(static_cast<Eigen::Index>(j)) = e;
    }
    // shuffle columns so the good estimates are not always first
    std::vector<Eigen::Index> perm(k);
    for (std::size_t j = 0; j < k; ++j) perm[j] = static_cast<Eigen::Index>(j);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix shuffled(est.rows(), est.cols());
    for (std::size_t j = 0; j < k; ++j) shuffled.col(static_cast<Eigen::Index>(j)) = est.col(perm[j]);

    const auto sel = select_median_estimate(shuffled, V);
    const double dist = weighted_norm(V, shuffled.col(static_cast<Eigen::Index>(sel.index)) - theta);
    worst_ratio = std::max(worst_ratio, dist / gamma);
    if (dist > 3.0 * gamma * (1.0 + 1e-12)) ++failures;
  }
  std::ostringstream os;
  os << configurations << " configurations, max selected distance / gamma = " << worst_ratio
     << ", failures = " << failures;
  return {"median-of-means ball", failures == 0, os.str(), sw.seconds()};
}

/// Closed-form optimistic value dominates <x, theta> on the ellipsoid boundary and is attained at theta~.
inline CheckResult check_ellipsoid_dominance(std::size_t ellipsoids, std::size_t samples, std::uint64_t seed) {
  detail::Stopwatch sw;
  Rng rng(derive_seed(seed, 4));
  std::uniform_int_distribution<std::size_t> pick_d(1, 8);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t violations = 0;
  double worst_attain = 0.0;
  for (std::size_t e = 0; e < ellipsoids; ++e) {
    const std::size_t d = pick_d(rng);
    ConfidenceEllipsoid ell;
    ell.metric = detail::random_spd(d, rng);
    ell.metric_inverse = ell.metric.inverse();
    ell.center = detail::gaussian_vector(d, rng);
    ell.radius = 0.1 + 5.0 * unif(rng);
    const Eigen::LLT<Matrix> llt(ell.metric);
    const Matrix Linv_T = llt.matrixU().solve(Matrix::Identity(ell.metric.rows(), ell.metric.cols()));
    Matrix arms(static_cast<Eigen::Index>(d), 10);
    for (Eigen::Index a = 0; a < arms.cols(); ++a) arms.col(a) = detail::gaussian_vector(d, rng);
    const Vector values = optimistic_values(ell, arms);
    for (Eigen::Index a = 0; a < arms.cols(); ++a) {
      const Vector x = arms.col(a);
      for (std::size_t s = 0; s < samples; ++s) {
        const Vector theta = ell.center + ell.radius * (Linv_T * detail::gaussian_vector(d, rng).normalized());
        if (x.dot(theta) > values(a) + 1e-9 * (1.0 + std::abs(values(a)))) ++violations;
      }
      const Vector best = optimistic_parameter(ell, x);
      worst_attain = std::max(worst_attain, std::abs(x.dot(best) - values(a)));
      if (ell.distance(best) > ell.radius * (1.0 + 1e-9)) ++violations;
    }
  }
  std::ostringstream os;
  os << ellipsoids << " ellipsoids x 10 arms x " << samples << " boundary points, violations = " << violations
     << ", max |value - <x, theta~>| = " << worst_attain;
  return {"optimistic-value dominance", violations == 0 && worst_attain < 1e-9, os.str(), sw.seconds()};
}

/// Monte Carlo moment checks on S1-S4 and the exact lower-bound moment identity.
inline CheckResult check_moment_bounds(std::size_t samples, std::uint64_t seed) {
  detail::Stopwatch sw;
  bool pass = true;
  std::ostringstream os;
  for (DatasetId id : {DatasetId::S1, DatasetId::S2, DatasetId::S3, DatasetId::S4}) {
    const auto inst = generate_instance(id, seed);
    Rng rng(derive_seed(seed, 5 + static_cast<std::uint64_t>(id)));
    const auto rep = verify_moment_bound(inst, samples, rng);
    pass = pass && rep.pass;
    os << dataset_name(id) << (rep.central ? " c" : " b") << ": " << rep.empirical_moment << " <= "
       << rep.declared_bound << (rep.pass ? " ok; " : " FAIL; ");
  }
  for (std::size_t d : {2u, 4u, 6u}) {
    const auto lb = lower_bound_instance(d, 0.5, 10000, seed);
    for (Eigen::Index a = 0; a < lb.arms.cols(); ++a) {
      const Vector x = lb.arms.col(a);
      const double mu = x.dot(lb.theta_star);
      // two-point distribution: value (1/Delta)^{1/eps} w.p. Delta^{1/eps} mu
      const double high = std::pow(1.0 / lb.delta_gap, 1.0 / lb.epsilon);
      const double prob = std::pow(lb.delta_gap, 1.0 / lb.epsilon) * mu;
      const double moment = prob * std::pow(high, 1.0 + lb.epsilon);
      if (std::abs(moment - lb.analytic_raw_moment(x)) > 1e-9 * moment || moment > static_cast<double>(d) + 1e-12 ||
          std::abs(prob * high - mu) > 1e-12)
        pass = false;
    }
  }
  os << "lower-bound analytic moments <= d";
  return {"moment bounds", pass, os.str(), sw.seconds()};
}

/// Fraction of noise draws for which a single ridge estimate on a fixed design
/// lands within (C d c)^{1/(1+eps)} n^{(1-eps)/(2(1+eps))} + sqrt(lambda) S; must reach 3/4 - slack.
inline CheckResult check_lse_coverage(std::size_t d, std::size_t n, std::size_t draws, double constant,
                                      double slack, std::uint64_t seed) {
  detail::Stopwatch sw;
  const CustomSpec spec{n, d, StudentT{3.0, 0.0, 1.0}, 1.0};
  const auto inst = generate_instance(spec, seed);
  const double c = *inst.bound_c;
  const double eps = inst.epsilon;
  const double lambda = 1.0;
  DesignState design(d, lambda);
  for (std::size_t i = 0; i < n; ++i) design.update(inst.arm(i));
  const double gamma = std::pow(constant * static_cast<double>(d) * c, 1.0 / (1.0 + eps)) *
                           std::pow(static_cast<double>(n), (1.0 - eps) / (2.0 * (1.0 + eps))) +
                       std::sqrt(lambda) * inst.S;
  std::size_t covered = 0;
  for (std::size_t m = 0; m < draws; ++m) {
    Vector s = Vector::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = round_rng(derive_seed(seed, 6 + m), i + 1);
      s += sample_payoff(inst, i, rng) * inst.arm(i);
    }
    const Vector est = ridge_solve(design, s);
    if (weighted_norm(design.V(), est - inst.theta_star) <= gamma) ++covered;
  }
  const double frac = static_cast<double>(covered) / static_cast<double>(draws);
  std::ostringstream os;
  os << "d=" << d << " n=" << n << " draws=" << draws << " radius=" << gamma << " coverage=" << frac
     << " (need >= " << 0.75 - slack << ")";
  return {"LSE coverage", frac >= 0.75 - slack, os.str(), sw.seconds()};
}

/// TOFU runs on a Pareto instance; fraction of (run, round) pairs with theta* inside the region.
inline CheckResult check_tofu_coverage(const InstanceSpec& spec, std::size_t runs, std::size_t horizon,
                                       double delta, double slack, std::uint64_t seed) {
  detail::Stopwatch sw;
  const auto inst = generate_instance(spec, seed);
  AlgoConfig cfg;
  cfg.algo = Algorithm::Tofu;
  cfg.delta = delta;
  std::size_t covered = 0, total = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    auto policy = make_policy(cfg, inst, horizon);
    const std::uint64_t rep_seed = repetition_seed(seed, r);
    for (std::size_t t = 1; t <= horizon; ++t) {
      const std::size_t a = policy->select(inst.arms);
      Rng rng = round_rng(rep_seed, t);
      const double y = sample_payoff(inst, a, rng);
      policy->update(inst.arm(a), std::span<const double>(&y, 1));
      covered += policy->certify(inst.theta_star) ? 1 : 0;
      ++total;
    }
  }
  const double frac = static_cast<double>(covered) / static_cast<double>(total);
  std::ostringstream os;
  os << runs << " runs x " << horizon << " rounds, coverage=" << frac << " (need >= " << 1.0 - delta - slack << ")";
  return {"TOFU coverage", frac >= 1.0 - delta - slack, os.str(), sw.seconds()};
}

/// MENU runs; fraction of (run, epoch) pairs with theta* inside the region.
inline CheckResult check_menu_coverage(const InstanceSpec& spec, std::size_t runs, std::size_t horizon, double delta,
                                       double constant, std::uint64_t seed) {
  detail::Stopwatch sw;
  const auto inst = generate_instance(spec, seed);
  AlgoConfig cfg;
  cfg.algo = Algorithm::Menu;
  cfg.delta = delta;
  cfg.menu_constant = constant;
  std::size_t covered = 0, total = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    auto policy = make_policy(cfg, inst, horizon);
    const std::uint64_t rep_seed = repetition_seed(seed, r);
    std::vector<double> payoffs(policy->pulls_per_decision());
    std::uint64_t round = 0;
    for (std::size_t n = 0; n < policy->decisions(); ++n) {
      const std::size_t a = policy->select(inst.arms);
      for (auto& y : payoffs) {
        Rng rng = round_rng(rep_seed, ++round);
        y = sample_payoff(inst, a, rng);
      }
      policy->update(inst.arm(a), payoffs);
      covered += policy->certify(inst.theta_star) ? 1 : 0;
      ++total;
    }
  }
  const double frac = static_cast<double>(covered) / static_cast<double>(total);
  const double need = 1.0 - delta;
  std::ostringstream os;
  os << runs << " runs x " << total / std::max<std::size_t>(runs, 1) << " epochs, coverage=" << frac
     << " (need >= " << need << ")";
  return {"MENU coverage", frac >= need, os.str(), sw.seconds()};
}

}  // namespace linbet
