#pragma once

// Simulated heavy-tailed linear bandit worlds: the synthetic S1-S4 datasets,
// custom instances, and the two-point lower-bound construction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "linbet/errors.hpp"
#include "linbet/linalg.hpp"
#include "linbet/random.hpp"

namespace linbet {

struct StudentT {
  double dof = 3.0;
  double location = 0.0;
  double scale = 1.0;
};

/// Payoff itself is Pareto(shape, s_m) with s_m chosen per arm so the mean is x^T theta*.
struct ParetoPayoff {
  double shape = 2.0;
};

/// Two-point payoff {0, (1/delta)^{1/eps}} with mean x^T theta*.
struct LowerBoundBernoulli {
  double delta = 0.0;
  double epsilon = 1.0;
};

using NoiseModel = std::variant<StudentT, ParetoPayoff, LowerBoundBernoulli>;

inline std::string noise_name(const NoiseModel& noise) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, StudentT>) return "student_t";
        else if constexpr (std::is_same_v<T, ParetoPayoff>) return "pareto";
        else return "lower_bound_bernoulli";
      },
      noise);
}

// ---------------------------------------------------------------------------
// Closed-form moments

/// E|T|^p for a standard Student-t with nu degrees of freedom, p < nu.
inline double student_t_abs_moment(double nu, double p) {
  if (!(p < nu)) throw InvalidInput("student_t_abs_moment: moment order must be below dof");
  return std::pow(nu, p / 2.0) * std::tgamma((p + 1.0) / 2.0) * std::tgamma((nu - p) / 2.0) /
         (std::sqrt(std::numbers::pi) * std::tgamma(nu / 2.0));
}

/// E[Y^p] for Y ~ Pareto(shape alpha, scale s), p < alpha.
inline double pareto_raw_moment(double alpha, double scale, double p) {
  if (!(p < alpha)) throw InvalidInput("pareto_raw_moment: moment order must be below shape");
  return alpha * std::pow(scale, p) / (alpha - p);
}

/// Scale that gives a Pareto(alpha) variable the requested mean (mean/2 at alpha = 2).
inline double pareto_scale_for_mean(double alpha, double mean) { return mean * (alpha - 1.0) / alpha; }

/// Inverse CDF: s * (1 - u)^{-1/alpha}.
inline double pareto_quantile(double scale, double alpha, double u) {
  return scale * std::pow(1.0 - u, -1.0 / alpha);
}

// ---------------------------------------------------------------------------
// Instances

struct BanditInstance {
  std::string name = "custom";
  Matrix arms;         ///< d x K, one arm per column; fixed across rounds.
  Vector theta_star;
  NoiseModel noise = StudentT{};
  double epsilon = 1.0;
  std::optional<double> bound_b;  ///< E|y|^{1+eps} <= b
  std::optional<double> bound_c;  ///< E|y - x^T theta*|^{1+eps} <= c
  double D = 0.0;
  double S = 0.0;
  double L = 0.0;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(arms.rows()); }
  std::size_t n_arms() const noexcept { return static_cast<std::size_t>(arms.cols()); }
  Vector arm(std::size_t i) const { return arms.col(static_cast<Eigen::Index>(i)); }
  double mean(std::size_t i) const { return arms.col(static_cast<Eigen::Index>(i)).dot(theta_star); }
  Vector means() const { return arms.transpose() * theta_star; }
};

enum class DatasetId { S1, S2, S3, S4 };

struct CustomSpec {
  std::size_t n_arms = 20;
  std::size_t d = 10;
  NoiseModel noise = StudentT{};
  double epsilon = 1.0;
};

using InstanceSpec = std::variant<DatasetId, CustomSpec>;

inline std::string dataset_name(DatasetId id) {
  switch (id) {
    case DatasetId::S1: return "S1";
    case DatasetId::S2: return "S2";
    case DatasetId::S3: return "S3";
    case DatasetId::S4: return "S4";
  }
  return "?";
}

/// Accepts "S1".."S4" in either case.
inline DatasetId parse_dataset_id(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (s == "S1") return DatasetId::S1;
  if (s == "S2") return DatasetId::S2;
  if (s == "S3") return DatasetId::S3;
  if (s == "S4") return DatasetId::S4;
  throw ConfigError("unknown dataset id '" + std::string(text) + "' (expected S1, S2, S3 or S4)");
}

/// Table of the four synthetic datasets.
inline CustomSpec dataset_spec(DatasetId id) {
  switch (id) {
    case DatasetId::S1: return {20, 10, StudentT{3.0, 0.0, 1.0}, 1.0};
    case DatasetId::S2: return {100, 20, StudentT{3.0, 0.0, 1.0}, 1.0};
    case DatasetId::S3: return {20, 10, ParetoPayoff{2.0}, 0.5};
    case DatasetId::S4: return {100, 20, ParetoPayoff{2.0}, 0.5};
  }
  throw ConfigError("unknown dataset id");
}

namespace detail {

inline void validate_noise(const NoiseModel& noise, double epsilon) {
  const double p = 1.0 + epsilon;
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  if (const auto* t = std::get_if<StudentT>(&noise)) {
    if (!(t->dof > p)) throw ConfigError("Student-t dof must exceed 1 + epsilon");
    if (!(t->scale >= 0.0)) throw ConfigError("Student-t scale must be nonnegative");
  } else if (const auto* par = std::get_if<ParetoPayoff>(&noise)) {
    if (!(par->shape > p)) throw ConfigError("Pareto shape must exceed 1 + epsilon");
  }
}

/// Fills D, S, L and the declared moment bounds that match the noise model.
inline void finish_instance(BanditInstance& inst) {
  const double p = 1.0 + inst.epsilon;
  const Vector mu = inst.means();
  inst.L = mu.cwiseAbs().maxCoeff();
  if (const auto* t = std::get_if<StudentT>(&inst.noise)) {
    inst.bound_c = std::pow(t->scale, p) * student_t_abs_moment(t->dof, p);
    inst.bound_b.reset();
  } else if (const auto* par = std::get_if<ParetoPayoff>(&inst.noise)) {
    if (mu.minCoeff() <= 0.0) throw ConfigError("Pareto payoffs need strictly positive arm means");
    double b = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      b = std::max(b, pareto_raw_moment(par->shape, pareto_scale_for_mean(par->shape, mu(i)), p));
    inst.bound_b = b;
    inst.bound_c.reset();
  }
}

}  // namespace detail

/// Arms and theta* coordinates i.i.d. uniform on [0,1]; D = S = sqrt(d).
inline BanditInstance generate_instance(const InstanceSpec& spec, std::uint64_t seed) {
  CustomSpec cs;
  std::string name = "custom";
  if (const auto* id = std::get_if<DatasetId>(&spec)) {
    cs = dataset_spec(*id);
    name = dataset_name(*id);
  } else {
    cs = std::get<CustomSpec>(spec);
  }
  if (cs.n_arms == 0 || cs.d == 0) throw ConfigError("instance needs at least one arm and one dimension");
  if (std::holds_alternative<LowerBoundBernoulli>(cs.noise))
    throw ConfigError("lower-bound payoffs are built with lower_bound_instance");
  detail::validate_noise(cs.noise, cs.epsilon);

  Rng rng = instance_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  BanditInstance inst;
  inst.name = name;
  inst.noise = cs.noise;
  inst.epsilon = cs.epsilon;
  const auto d = static_cast<Eigen::Index>(cs.d);
  const auto K = static_cast<Eigen::Index>(cs.n_arms);
  inst.arms.resize(d, K);
  for (Eigen::Index a = 0; a < K; ++a)
    for (Eigen::Index i = 0; i < d; ++i) inst.arms(i, a) = unif(rng);
  inst.theta_star.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) inst.theta_star(i) = unif(rng);
  inst.D = std::sqrt(static_cast<double>(cs.d));
  inst.S = inst.D;
  detail::finish_instance(inst);
  return inst;
}

/// Draws y = x^T theta* + eta for the given arm.
inline double sample_payoff(const BanditInstance& inst, std::size_t arm_index, Rng& rng) {
  if (arm_index >= inst.n_arms()) throw InvalidInput("sample_payoff: arm index out of range");
  const double mu = inst.mean(arm_index);
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, StudentT>) {
          if (n.scale == 0.0) return mu + n.location;
          std::normal_distribution<double> normal(0.0, 1.0);
          std::chi_squared_distribution<double> chi2(n.dof);
          const double z = normal(rng);
          const double w = chi2(rng);
          return mu + n.location + n.scale * z * std::sqrt(n.dof / w);
        } else if constexpr (std::is_same_v<T, ParetoPayoff>) {
          std::uniform_real_distribution<double> unif(0.0, 1.0);
          return pareto_quantile(pareto_scale_for_mean(n.shape, mu), n.shape, unif(rng));
        } else {
          const double prob = std::pow(n.delta, 1.0 / n.epsilon) * mu;
          if (prob > 1.0 || prob < 0.0) throw ConfigError("lower-bound payoff probability outside [0,1]");
          std::uniform_real_distribution<double> unif(0.0, 1.0);
          return unif(rng) < prob ? std::pow(1.0 / n.delta, 1.0 / n.epsilon) : 0.0;
        }
      },
      inst.noise);
}

struct OptimalArm {
  std::size_t index = 0;
  double value = 0.0;
};

/// argmax_x x^T theta*, lowest index on ties.
inline OptimalArm optimal_value(const BanditInstance& inst) {
  if (inst.n_arms() == 0) throw InvalidInput("optimal_value: empty arm set");
  OptimalArm best{0, inst.mean(0)};
  for (std::size_t a = 1; a < inst.n_arms(); ++a) {
    const double v = inst.mean(a);
    if (v > best.value) best = {a, v};
  }
  return best;
}

/// Declared raw-moment bound, or one derived from the central bound by Minkowski:
/// (E|mu + eta|^p)^{1/p} <= |mu| + c^{1/p}.
inline double raw_moment_bound(const BanditInstance& inst) {
  if (inst.bound_b) return *inst.bound_b;
  if (!inst.bound_c) throw ConfigError("instance declares no moment bound");
  const double p = 1.0 + inst.epsilon;
  return std::pow(inst.L + std::pow(*inst.bound_c, 1.0 / p), p);
}

/// Declared central-moment bound, or one derived from the raw bound by the c_r inequality:
/// E|y - mu|^p <= 2^{p-1} (E|y|^p + |mu|^p).
inline double central_moment_bound(const BanditInstance& inst) {
  if (inst.bound_c) return *inst.bound_c;
  if (!inst.bound_b) throw ConfigError("instance declares no moment bound");
  const double p = 1.0 + inst.epsilon;
  return std::pow(2.0, p - 1.0) * (*inst.bound_b + std::pow(inst.L, p));
}

struct MomentReport {
  bool central = false;          ///< which bound was checked
  double empirical_moment = 0.0; ///< max over arms of the truncated Monte Carlo estimate
  double declared_bound = 0.0;
  double standard_error = 0.0;   ///< at the arm attaining the max
  double cap = 0.0;              ///< per-sample cap on |y|^{1+eps}
  bool pass = false;
  std::optional<double> analytic_moment;  ///< exact, lower-bound payoffs only
};

/// Monte Carlo check of the declared (1+eps)-moment bound at every arm.
///
/// |y|^{1+eps} usually has infinite variance here, so each sample is capped at
/// declared * sqrt(n). The capped mean never exceeds the true moment, and its
/// standard error is finite, so "capped mean > declared + 5 se" is a sound
/// rejection of the declared bound.
inline MomentReport verify_moment_bound(const BanditInstance& inst, std::size_t n_samples, Rng& rng) {
  if (n_samples < 10000) throw InvalidInput("verify_moment_bound: need at least 1e4 samples");
  MomentReport report;
  report.central = !inst.bound_b.has_value();
  report.declared_bound = report.central ? central_moment_bound(inst) : raw_moment_bound(inst);
  const double p = 1.0 + inst.epsilon;
  const double n = static_cast<double>(n_samples);
  report.cap = report.declared_bound * std::sqrt(n);
  report.pass = true;
  report.empirical_moment = -1.0;
  for (std::size_t a = 0; a < inst.n_arms(); ++a) {
    const double mu = inst.mean(a);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
      const double y = sample_payoff(inst, a, rng);
      const double m = std::min(report.cap, std::pow(std::abs(report.central ? y - mu : y), p));
      sum += m;
      sum_sq += m * m;
    }
    const double mean = sum / n;
    const double se = std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / n);
    if (mean > report.declared_bound + 5.0 * se) report.pass = false;
    if (mean > report.empirical_moment) {
      report.empirical_moment = mean;
      report.standard_error = se;
    }
  }
  if (const auto* lb = std::get_if<LowerBoundBernoulli>(&inst.noise))
    report.analytic_moment = inst.means().maxCoeff() / lb->delta;
  return report;
}

// ---------------------------------------------------------------------------
// Lower-bound construction

struct LowerBoundInstance {
  std::size_t d = 2;
  double epsilon = 1.0;
  std::size_t horizon = 1;
  double delta_gap = 0.0;
  Vector theta_star;
  Matrix arms;  ///< d x K discretization of {x >= 0 : x_{2i-1} + x_{2i} = 1}

  /// Exact E|y|^{1+eps} for an arm: x^T theta* / delta.
  double analytic_raw_moment(const Vector& x) const { return x.dot(theta_star) / delta_gap; }

  /// Exact E|y - mu|^{1+eps} for the two-point payoff.
  double analytic_central_moment(const Vector& x) const {
    const double mu = x.dot(theta_star);
    const double high = std::pow(1.0 / delta_gap, 1.0 / epsilon);
    const double prob = std::pow(delta_gap, 1.0 / epsilon) * mu;
    const double p = 1.0 + epsilon;
    return prob * std::pow(high - mu, p) + (1.0 - prob) * std::pow(mu, p);
  }
};

inline constexpr std::size_t kLowerBoundGridPoints = 9;
inline constexpr std::size_t kLowerBoundArmCap = 4096;

/// Gap Delta = T^{-eps/(1+eps)} / 12, clamped into (0, min(1/d, (1/2)^{eps/(1+eps)})].
inline double lower_bound_gap(std::size_t d, double epsilon, std::size_t T) {
  const double expo = epsilon / (1.0 + epsilon);
  const double raw = std::pow(static_cast<double>(T), -expo) / 12.0;
  const double cap = std::min(1.0 / static_cast<double>(d), std::pow(0.5, expo));
  return std::min(raw, cap);
}

/// Smallest horizon for which the lower bound applies: (d/12)^{eps/(1+eps)}.
inline double lower_bound_min_horizon(std::size_t d, double epsilon) {
  return std::pow(static_cast<double>(d) / 12.0, epsilon / (1.0 + epsilon));
}

/// The floor (d/192) T^{1/(1+eps)} on expected regret.
inline double lower_bound_regret_floor(std::size_t d, double epsilon, std::size_t T) {
  return static_cast<double>(d) / 192.0 * std::pow(static_cast<double>(T), 1.0 / (1.0 + epsilon));
}

inline LowerBoundInstance lower_bound_instance(std::size_t d, double epsilon, std::size_t T, std::uint64_t seed) {
  if (d == 0 || d % 2 != 0) throw InvalidInput("lower_bound_instance: d must be even and positive");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("lower_bound_instance: epsilon must lie in (0, 1]");
  if (static_cast<double>(T) < lower_bound_min_horizon(d, epsilon))
    throw ConfigError("lower_bound_instance: T must be at least (d/12)^{eps/(1+eps)}");

  LowerBoundInstance lb;
  lb.d = d;
  lb.epsilon = epsilon;
  lb.horizon = T;
  lb.delta_gap = lower_bound_gap(d, epsilon, T);

  Rng rng = instance_rng(seed);
  const std::size_t pairs = d / 2;
  lb.theta_star.resize(static_cast<Eigen::Index>(d));
  std::vector<std::size_t> best_tuple(pairs);
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < pairs; ++i) {
    const bool first_heavy = coin(rng);
    lb.theta_star(static_cast<Eigen::Index>(2 * i)) = first_heavy ? 2.0 * lb.delta_gap : lb.delta_gap;
    lb.theta_star(static_cast<Eigen::Index>(2 * i + 1)) = first_heavy ? lb.delta_gap : 2.0 * lb.delta_gap;
    best_tuple[i] = first_heavy ? kLowerBoundGridPoints - 1 : 0;
  }

  // Grid tuples: entry i is the grid index of x_{2i-1}. Enumerate when small,
  // otherwise subsample uniformly without replacement.
  std::set<std::vector<std::size_t>> tuples;
  double total = 1.0;
  for (std::size_t i = 0; i < pairs; ++i) total *= static_cast<double>(kLowerBoundGridPoints);
  if (total <= static_cast<double>(kLowerBoundArmCap)) {
    std::vector<std::size_t> tup(pairs, 0);
    const auto count = static_cast<std::size_t>(total);
    for (std::size_t c = 0; c < count; ++c) {
      std::size_t rem = c;
      for (std::size_t i = pairs; i-- > 0;) {
        tup[i] = rem % kLowerBoundGridPoints;
        rem /= kLowerBoundGridPoints;
      }
      tuples.insert(tup);
    }
  } else {
    std::uniform_int_distribution<std::size_t> grid(0, kLowerBoundGridPoints - 1);
    while (tuples.size() < kLowerBoundArmCap) {
      std::vector<std::size_t> tup(pairs);
      for (auto& g : tup) g = grid(rng);
      tuples.insert(std::move(tup));
    }
    // The optimal arm always survives subsampling.
    if (!tuples.contains(best_tuple)) {
      auto victim = tuples.begin();
      std::advance(victim, std::uniform_int_distribution<std::size_t>(0, tuples.size() - 1)(rng));
      tuples.erase(victim);
      tuples.insert(best_tuple);
    }
  }

  lb.arms.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(tuples.size()));
  Eigen::Index col = 0;
  const double step = 1.0 / static_cast<double>(kLowerBoundGridPoints - 1);
  for (const auto& tup : tuples) {
    for (std::size_t i = 0; i < pairs; ++i) {
      const double a = static_cast<double>(tup[i]) * step;
      lb.arms(static_cast<Eigen::Index>(2 * i), col) = a;
      lb.arms(static_cast<Eigen::Index>(2 * i + 1), col) = 1.0 - a;
    }
    ++col;
  }
  return lb;
}

/// Packages the construction as an ordinary instance with exact moment bounds.
inline BanditInstance to_bandit_instance(const LowerBoundInstance& lb) {
  BanditInstance inst;
  inst.name = "lowerbound";
  inst.arms = lb.arms;
  inst.theta_star = lb.theta_star;
  inst.noise = LowerBoundBernoulli{lb.delta_gap, lb.epsilon};
  inst.epsilon = lb.epsilon;
  double b = 0.0, c = 0.0;
  for (Eigen::Index a = 0; a < lb.arms.cols(); ++a) {
    const Vector x = lb.arms.col(a);
    b = std::max(b, lb.analytic_raw_moment(x));
    c = std::max(c, lb.analytic_central_moment(x));
  }
  inst.bound_b = b;
  inst.bound_c = c;
  inst.D = std::sqrt(static_cast<double>(lb.d) / 2.0);
  inst.S = lb.theta_star.norm();
  inst.L = inst.means().cwiseAbs().maxCoeff();
  return inst;
}

}  // namespace linbet
