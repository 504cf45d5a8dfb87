#pragma once

// JSON instance specs and audit export.
//
//   {"dataset": "S1"}
//   {"n_arms": 20, "d": 10, "epsilon": 1.0,
//    "noise": {"type": "student_t", "dof": 3, "location": 0, "scale": 1}}
//   {"n_arms": 20, "d": 10, "epsilon": 0.5, "noise": {"type": "pareto", "shape": 2}}

#include <string>

#include <json.hpp>

#include "linbet/environments.hpp"

namespace linbet {

inline NoiseModel parse_noise(const nlohmann::json& j) {
  const std::string type = j.value("type", "student_t");
  if (type == "student_t") return StudentT{j.value("dof", 3.0), j.value("location", 0.0), j.value("scale", 1.0)};
  if (type == "pareto") return ParetoPayoff{j.value("shape", 2.0)};
  throw ConfigError("unknown noise type '" + type + "'");
}

inline nlohmann::json noise_to_json(const NoiseModel& noise) {
  return std::visit(
      [](const auto& n) -> nlohmann::json {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, StudentT>)
          return {{"type", "student_t"}, {"dof", n.dof}, {"location", n.location}, {"scale", n.scale}};
        else if constexpr (std::is_same_v<T, ParetoPayoff>)
          return {{"type", "pareto"}, {"shape", n.shape}};
        else
          return {{"type", "lower_bound_bernoulli"}, {"delta", n.delta}, {"epsilon", n.epsilon}};
      },
      noise);
}

inline InstanceSpec parse_instance_spec(const nlohmann::json& j) {
  try {
    if (j.contains("dataset")) return parse_dataset_id(j.at("dataset").get<std::string>());
    CustomSpec cs;
    cs.n_arms = j.at("n_arms").get<std::size_t>();
    cs.d = j.at("d").get<std::size_t>();
    cs.epsilon = j.value("epsilon", 1.0);
    if (j.contains("noise")) cs.noise = parse_noise(j.at("noise"));
    return cs;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed instance spec: ") + e.what());
  }
}

inline nlohmann::json instance_to_json(const BanditInstance& inst) {
  nlohmann::json arms = nlohmann::json::array();
  for (Eigen::Index a = 0; a < inst.arms.cols(); ++a) {
    nlohmann::json col = nlohmann::json::array();
    for (Eigen::Index i = 0; i < inst.arms.rows(); ++i) col.push_back(inst.arms(i, a));
    arms.push_back(std::move(col));
  }
  nlohmann::json theta = nlohmann::json::array();
  for (Eigen::Index i = 0; i < inst.theta_star.size(); ++i) theta.push_back(inst.theta_star(i));
  nlohmann::json j = {{"name", inst.name},     {"d", inst.dim()},     {"n_arms", inst.n_arms()},
                      {"epsilon", inst.epsilon}, {"noise", noise_to_json(inst.noise)},
                      {"arms", arms},          {"theta_star", theta}, {"D", inst.D},
                      {"S", inst.S},           {"L", inst.L}};
  j["bound_b"] = inst.bound_b ? nlohmann::json(*inst.bound_b) : nlohmann::json(nullptr);
  j["bound_c"] = inst.bound_c ? nlohmann::json(*inst.bound_c) : nlohmann::json(nullptr);
  const auto best = optimal_value(inst);
  j["optimal_arm"] = best.index;
  j["optimal_mean"] = best.value;
  return j;
}

}  // namespace linbet
