// Runs MENU and MoM on S1 for a short horizon and prints the final means.

#include <iostream>

#include "linbet/harness.hpp"

int main() {
  using namespace linbet;
  const auto instance = generate_instance(DatasetId::S1, 42);
  std::cout << instance.name << ": " << instance.n_arms() << " arms in R^" << instance.dim()
            << ", optimal mean " << optimal_value(instance).value << '\n';

  for (Algorithm algo : {Algorithm::Menu, Algorithm::Mom}) {
    AlgoConfig cfg;
    cfg.algo = algo;
    const auto curve = aggregate(run_experiment(instance, cfg, 5000, 4, 42));
    std::cout << to_string(algo) << ": " << curve.rounds() << " rounds, cumulative payoff "
              << curve.mean_cum_payoff.back() << " +- " << curve.std_cum_payoff.back() << ", regret "
              << curve.mean_cum_regret.back() << '\n';
  }
}
