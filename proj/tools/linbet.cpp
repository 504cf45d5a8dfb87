// linbet: heavy-tailed linear bandit simulator.
//
//   linbet reproduce --dataset s1 --out results --seed 42
//   linbet run --dataset s3 --algo tofu --T 5000
//   linbet validate [--suite weights]
//   linbet lowerbound --d 2 --epsilon 1 --T 10000 --reps 20
//   linbet scaling --algo menu --T-list 1024,2048,4096,8192,16384
//   linbet plot --input results/s1_aggregate.csv --out plots

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "linbet/commands.hpp"

namespace {

enum Flag : unsigned {
  kDataset = 1u << 0,
  kAlgo = 1u << 1,
  kT = 1u << 2,
  kReps = 1u << 3,
  kSeed = 1u << 4,
  kAlgoParams = 1u << 5,  // --lambda --delta --epsilon --moment-bound --truncation-convention
  kOut = 1u << 6,
  kJobs = 1u << 7,
  kSuite = 1u << 8,
  kD = 1u << 9,
  kTList = 1u << 10,
  kInput = 1u << 11,
  kEpsilon = 1u << 12,
};

void add_flags(CLI::App* app, linbet::CliOptions& o, unsigned flags, const std::string& T_default,
               const std::string& reps_default) {
  using linbet::CliOptions;
  app->add_option_function<std::string>("--config", [&o](const std::string& v) { o.config = v; },
                                        "JSON config file; flags override its values")
      ->default_str("none");
  if (flags & kDataset)
    app->add_option_function<std::string>("--dataset", [&o](const std::string& v) { o.dataset = v; },
                                          "dataset id: s1, s2, s3 or s4")
        ->default_str(app->get_name() == "reproduce" ? "none, required" : "s1");
  if (flags & kAlgo)
    app->add_option_function<std::string>("--algo", [&o](const std::string& v) { o.algo = v; },
                                          "policy: menu, tofu, mom or crt")
        ->default_str("menu");
  if (flags & kT)
    app->add_option_function<std::size_t>("--T", [&o](const std::size_t& v) { o.T = v; }, "horizon (rounds)")
        ->default_str(T_default);
  if (flags & kReps)
    app->add_option_function<std::size_t>("--reps", [&o](const std::size_t& v) { o.reps = v; }, "repetitions")
        ->default_str(reps_default);
  if (flags & kSeed)
    app->add_option_function<std::uint64_t>("--seed", [&o](const std::uint64_t& v) { o.seed = v; }, "root seed")
        ->default_str(std::to_string(linbet::kDefaultSeed));
  if (flags & (kAlgoParams | kEpsilon))
    app->add_option_function<double>("--epsilon", [&o](const double& v) { o.epsilon = v; },
                                     "moment order epsilon in (0, 1]")
        ->default_str(flags & kAlgoParams ? "from instance" : "1.0");
  if (flags & kAlgoParams) {
    app->add_option_function<double>("--lambda", [&o](const double& v) { o.lambda = v; }, "ridge regularizer")
        ->default_str("1.0");
    app->add_option_function<double>("--delta", [&o](const double& v) { o.delta = v; }, "failure probability")
        ->default_str("0.1");
    app->add_option_function<double>("--moment-bound", [&o](const double& v) { o.moment_bound = v; },
                                     "moment bound b (TOFU, CRT) or c (MENU, MoM)")
        ->default_str("from instance");
    app->add_option_function<std::string>("--truncation-convention",
                                          [&o](const std::string& v) { o.truncation = v; },
                                          "TOFU threshold convention: proof or literal")
        ->default_str("proof");
  }
  if (flags & kOut)
    app->add_option_function<std::string>("--out", [&o](const std::string& v) { o.out = v; }, "output directory")
        ->default_str("results");
  if (flags & kJobs)
    app->add_option_function<std::size_t>("--jobs", [&o](const std::size_t& v) { o.jobs = v; },
                                          "worker threads; 0 = all logical processors (env LINBET_JOBS)")
        ->default_str("0");
  if (flags & kSuite)
    app->add_option_function<std::string>("--suite", [&o](const std::string& v) { o.suite = v; },
                                          "all, weights, noclip, mom, dominance, moments or coverage")
        ->default_str("all");
  if (flags & kD)
    app->add_option_function<std::size_t>("--d", [&o](const std::size_t& v) { o.d = v; }, "even dimension")
        ->default_str("2");
  if (flags & kTList)
    app->add_option_function<std::vector<std::size_t>>(
           "--T-list", [&o](const std::vector<std::size_t>& v) { o.T_list = v; }, "comma-separated horizons")
        ->delimiter(',')
        ->default_str("1024,2048,4096,8192,16384");
  if (flags & kInput)
    app->add_option("--input", o.inputs, "aggregate CSV file(s)")->delimiter(',')->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"linbet: linear bandits with heavy-tailed payoffs (MENU, TOFU, MoM, CRT)"};
  app.require_subcommand(1);
  app.set_version_flag("--version", LINBET_BUILD_ID);

  linbet::CliOptions opts;
  constexpr unsigned common = kSeed | kAlgoParams | kOut | kJobs;
  auto* run = app.add_subcommand("run", "run one policy on one instance");
  add_flags(run, opts, common | kDataset | kAlgo | kT | kReps, "20000 (MENU, MoM) / 10000 (TOFU, CRT)", "10");
  auto* reproduce = app.add_subcommand("reproduce", "published pairing on S1-S4: MENU vs MoM or TOFU vs CRT");
  add_flags(reproduce, opts, common | kDataset | kT | kReps, "20000 (S1, S2) / 10000 (S3, S4)", "10");
  auto* validate = app.add_subcommand("validate", "fast invariant suite");
  add_flags(validate, opts, kSeed | kSuite, "", "");
  auto* lowerbound = app.add_subcommand("lowerbound", "MENU and TOFU on the lower-bound instance");
  add_flags(lowerbound, opts, kSeed | kAlgo | kEpsilon | kOut | kJobs | kT | kReps | kD, "10000", "10");
  auto* scaling = app.add_subcommand("scaling", "regret scaling exponent across horizons");
  add_flags(scaling, opts, common | kDataset | kAlgo | kReps | kTList, "", "10");
  auto* plot = app.add_subcommand("plot", "SVG from aggregate CSV files");
  add_flags(plot, opts, kOut | kInput, "", "");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return linbet::kExitConfig;
  }

  return linbet::run_guarded(
      [&]() -> int {
        const auto resolved = linbet::resolve_options(opts);
        if (run->parsed()) return linbet::cmd_run(resolved, std::cout);
        if (reproduce->parsed()) return linbet::cmd_reproduce(resolved, std::cout);
        if (validate->parsed()) return linbet::cmd_validate(resolved, std::cout);
        if (lowerbound->parsed()) return linbet::cmd_lowerbound(resolved, std::cout);
        if (scaling->parsed()) return linbet::cmd_scaling(resolved, std::cout, std::cerr);
        if (plot->parsed()) return linbet::cmd_plot(opts.inputs, resolved, std::cout);
        return linbet::kExitConfig;
      },
      std::cerr);
}
