#pragma once

// One select/update interface over MENU, TOFU, MoM and CRT, plus the JSON
// algorithm config:
//   {"algo": "menu"|"tofu"|"mom"|"crt", "lambda": 1.0, "delta": 0.1,
//    "S": real|"auto", "moment_bound": real|"from-instance", "epsilon": real,
//    "truncation_convention": "proof"|"literal", "groups": int,
//    "menu_constant": 9, "mom_constant": 1, "crt_constant": 4,
//    "beta_scale": 1, "pin_center": [..]}

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "linbet/baselines.hpp"
#include "linbet/environments.hpp"
#include "linbet/menu.hpp"
#include "linbet/tofu.hpp"

namespace linbet {

enum class Algorithm { Menu, Tofu, Mom, Crt };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Menu: return "menu";
    case Algorithm::Tofu: return "tofu";
    case Algorithm::Mom: return "mom";
    case Algorithm::Crt: return "crt";
  }
  return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "menu" || s == "MENU") return Algorithm::Menu;
  if (s == "tofu" || s == "TOFU") return Algorithm::Tofu;
  if (s == "mom" || s == "MoM" || s == "MOM") return Algorithm::Mom;
  if (s == "crt" || s == "CRT") return Algorithm::Crt;
  throw ConfigError("unknown algorithm '" + std::string(s) + "' (expected menu, tofu, mom or crt)");
}

/// Epoch policies pull the chosen arm several times per decision.
inline bool is_epoch_algorithm(Algorithm a) { return a == Algorithm::Menu || a == Algorithm::Mom; }

struct AlgoConfig {
  Algorithm algo = Algorithm::Menu;
  double lambda = 1.0;
  double delta = 0.1;
  std::optional<double> S;             ///< empty = instance bound
  std::optional<double> moment_bound;  ///< empty = from instance (c for MENU/MoM, b for TOFU/CRT)
  std::optional<double> epsilon;       ///< empty = instance epsilon
  TruncationConvention truncation = TruncationConvention::Proof;
  std::optional<std::size_t> groups;   ///< MENU k or MoM m
  double menu_constant = 9.0;
  double mom_constant = 1.0;
  double crt_constant = 4.0;
  // Selection-time overrides for oracle/diagnostic runs.
  double beta_scale = 1.0;
  std::optional<Vector> pin_center;
};

inline AlgoConfig parse_algo_config(const nlohmann::json& j, AlgoConfig cfg = {}) {
  try {
    if (j.contains("algo")) cfg.algo = parse_algorithm(j.at("algo").get<std::string>());
    if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
    if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
    if (j.contains("S")) {
      const auto& s = j.at("S");
      if (s.is_string()) {
        if (s.get<std::string>() != "auto") throw ConfigError("S must be a number or \"auto\"");
        cfg.S.reset();
      } else {
        cfg.S = s.get<double>();
      }
    }
    if (j.contains("moment_bound")) {
      const auto& m = j.at("moment_bound");
      if (m.is_string()) {
        if (m.get<std::string>() != "from-instance")
          throw ConfigError("moment_bound must be a number or \"from-instance\"");
        cfg.moment_bound.reset();
      } else {
        cfg.moment_bound = m.get<double>();
      }
    }
    if (j.contains("epsilon")) {
      const auto& e = j.at("epsilon");
      if (e.is_string()) {
        if (e.get<std::string>() != "from-instance") throw ConfigError("epsilon must be a number or \"from-instance\"");
        cfg.epsilon.reset();
      } else {
        cfg.epsilon = e.get<double>();
      }
    }
    if (j.contains("truncation_convention"))
      cfg.truncation = parse_truncation_convention(j.at("truncation_convention").get<std::string>());
    if (j.contains("groups")) cfg.groups = j.at("groups").get<std::size_t>();
    if (j.contains("menu_constant")) cfg.menu_constant = j.at("menu_constant").get<double>();
    if (j.contains("mom_constant")) cfg.mom_constant = j.at("mom_constant").get<double>();
    if (j.contains("crt_constant")) cfg.crt_constant = j.at("crt_constant").get<double>();
    if (j.contains("beta_scale")) cfg.beta_scale = j.at("beta_scale").get<double>();
    if (j.contains("pin_center")) {
      const auto v = j.at("pin_center").get<std::vector<double>>();
      cfg.pin_center = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed algorithm config: ") + e.what());
  }
  if (!(cfg.lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (!(cfg.beta_scale >= 0.0)) throw ConfigError("beta_scale must be nonnegative");
  return cfg;
}

inline nlohmann::json algo_config_to_json(const AlgoConfig& cfg) {
  nlohmann::json j = {{"algo", to_string(cfg.algo)},
                      {"lambda", cfg.lambda},
                      {"delta", cfg.delta},
                      {"truncation_convention", to_string(cfg.truncation)},
                      {"menu_constant", cfg.menu_constant},
                      {"mom_constant", cfg.mom_constant},
                      {"crt_constant", cfg.crt_constant},
                      {"beta_scale", cfg.beta_scale}};
  j["S"] = cfg.S ? nlohmann::json(*cfg.S) : nlohmann::json("auto");
  j["moment_bound"] = cfg.moment_bound ? nlohmann::json(*cfg.moment_bound) : nlohmann::json("from-instance");
  j["epsilon"] = cfg.epsilon ? nlohmann::json(*cfg.epsilon) : nlohmann::json("from-instance");
  if (cfg.groups) j["groups"] = *cfg.groups;
  if (cfg.pin_center) j["pin_center"] = std::vector<double>(cfg.pin_center->begin(), cfg.pin_center->end());
  return j;
}

class Policy {
 public:
  virtual ~Policy() = default;

  virtual Algorithm algorithm() const = 0;
  /// Rounds consumed by one decision (k, k_m, or 1).
  virtual std::size_t pulls_per_decision() const = 0;
  /// Number of decisions the policy makes over its horizon (N, N_m, or T).
  virtual std::size_t decisions() const = 0;
  virtual const ConfidenceEllipsoid& ellipsoid() const = 0;
  virtual void update(const Vector& arm, std::span<const double> payoffs) = 0;

  std::size_t effective_rounds() const { return pulls_per_decision() * decisions(); }

  std::size_t select(const Matrix& arms) const {
    if (beta_scale_ == 1.0 && !pin_center_) return select_optimistic_arm(ellipsoid(), arms);
    ConfidenceEllipsoid ell = ellipsoid();
    ell.radius *= beta_scale_;
    if (pin_center_) ell.center = *pin_center_;
    return select_optimistic_arm(ell, arms);
  }

  bool certify(const Vector& theta_star) const { return ellipsoid().contains(theta_star); }

  void set_selection_overrides(double beta_scale, std::optional<Vector> pin_center) {
    beta_scale_ = beta_scale;
    pin_center_ = std::move(pin_center);
  }

 private:
  double beta_scale_ = 1.0;
  std::optional<Vector> pin_center_;
};

namespace detail {

class MenuPolicy final : public Policy {
 public:
  explicit MenuPolicy(MenuParams p) : state_(p) {}
  Algorithm algorithm() const override { return Algorithm::Menu; }
  std::size_t pulls_per_decision() const override { return state_.k(); }
  std::size_t decisions() const override { return state_.N(); }
  const ConfidenceEllipsoid& ellipsoid() const override { return state_.ellipsoid(); }
  void update(const Vector& arm, std::span<const double> payoffs) override { state_.update(arm, payoffs); }
  const MenuState& state() const { return state_; }

 private:
  MenuState state_;
};

class MomPolicy final : public Policy {
 public:
  explicit MomPolicy(MomParams p) : state_(p) {}
  Algorithm algorithm() const override { return Algorithm::Mom; }
  std::size_t pulls_per_decision() const override { return state_.k(); }
  std::size_t decisions() const override { return state_.N(); }
  const ConfidenceEllipsoid& ellipsoid() const override { return state_.ellipsoid(); }
  void update(const Vector& arm, std::span<const double> payoffs) override { state_.update(arm, payoffs); }

 private:
  MomState state_;
};

class TofuPolicy final : public Policy {
 public:
  explicit TofuPolicy(TofuParams p) : state_(p), horizon_(p.T) {}
  Algorithm algorithm() const override { return Algorithm::Tofu; }
  std::size_t pulls_per_decision() const override { return 1; }
  std::size_t decisions() const override { return horizon_; }
  const ConfidenceEllipsoid& ellipsoid() const override { return state_.ellipsoid(); }
  void update(const Vector& arm, std::span<const double> payoffs) override {
    if (payoffs.size() != 1) throw InvalidInput("tofu_update: expected exactly one payoff");
    state_.update(arm, payoffs[0]);
  }

 private:
  TofuState state_;
  std::size_t horizon_;
};

class CrtPolicy final : public Policy {
 public:
  explicit CrtPolicy(CrtParams p) : state_(p), horizon_(p.T) {}
  Algorithm algorithm() const override { return Algorithm::Crt; }
  std::size_t pulls_per_decision() const override { return 1; }
  std::size_t decisions() const override { return horizon_; }
  const ConfidenceEllipsoid& ellipsoid() const override { return state_.ellipsoid(); }
  void update(const Vector& arm, std::span<const double> payoffs) override {
    if (payoffs.size() != 1) throw InvalidInput("crt_update: expected exactly one payoff");
    state_.update(arm, payoffs[0]);
  }

 private:
  CrtState state_;
  std::size_t horizon_;
};

}  // namespace detail

/// Builds a policy for `instance` over horizon T, resolving "auto"/"from-instance" settings.
inline std::unique_ptr<Policy> make_policy(const AlgoConfig& cfg, const BanditInstance& inst, std::size_t T) {
  const std::size_t d = inst.dim();
  const double eps = cfg.epsilon.value_or(inst.epsilon);
  const double S = cfg.S.value_or(inst.S);
  std::unique_ptr<Policy> policy;
  switch (cfg.algo) {
    case Algorithm::Menu: {
      MenuParams p{d, cfg.moment_bound.value_or(central_moment_bound(inst)), eps, cfg.delta, cfg.lambda, S, T,
                   cfg.groups, cfg.menu_constant};
      policy = std::make_unique<detail::MenuPolicy>(p);
      break;
    }
    case Algorithm::Mom: {
      MomParams p{d, cfg.moment_bound.value_or(central_moment_bound(inst)), eps, cfg.delta, cfg.lambda, S, T,
                  cfg.groups, cfg.mom_constant};
      policy = std::make_unique<detail::MomPolicy>(p);
      break;
    }
    case Algorithm::Tofu: {
      TofuParams p{d, cfg.moment_bound.value_or(raw_moment_bound(inst)), eps, cfg.delta, cfg.lambda, S, T,
                   cfg.truncation};
      policy = std::make_unique<detail::TofuPolicy>(p);
      break;
    }
    case Algorithm::Crt: {
      CrtParams p{d, cfg.moment_bound.value_or(raw_moment_bound(inst)), eps, cfg.delta, cfg.lambda, S, inst.D, T,
                  cfg.crt_constant};
      policy = std::make_unique<detail::CrtPolicy>(p);
      break;
    }
  }
  if (cfg.pin_center && cfg.pin_center->size() != static_cast<Eigen::Index>(d))
    throw ConfigError("pin_center dimension does not match the instance");
  policy->set_selection_overrides(cfg.beta_scale, cfg.pin_center);
  return policy;
}

}  // namespace linbet
