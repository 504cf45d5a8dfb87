#pragma once

// Command implementations behind the `linbet` executable. Each command takes
// the raw options (unset fields fall back to the --config file, then to the
// built-in defaults), writes its artifacts plus manifest.json into the output
// directory, and returns a process exit code:
//   0 success, 1 validation failure, 2 config error, 3 runtime failure.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "linbet/environments.hpp"
#include "linbet/errors.hpp"
#include "linbet/harness.hpp"
#include "linbet/instance_io.hpp"
#include "linbet/plot.hpp"
#include "linbet/policy.hpp"
#include "linbet/validation.hpp"

#ifndef LINBET_BUILD_ID
#define LINBET_BUILD_ID "linbet-unknown"
#endif

namespace linbet {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitConfig = 2, kExitRuntime = 3 };

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr std::size_t kDefaultReps = 10;

/// Options as given on the command line; empty means "not given".
struct CliOptions {
  std::optional<std::string> dataset;
  std::optional<std::string> algo;
  std::optional<std::size_t> T;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<double> delta;
  std::optional<double> epsilon;
  std::optional<double> moment_bound;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
  std::optional<std::string> truncation;
  std::optional<std::string> suite;
  std::optional<std::string> config;
  std::optional<std::size_t> d;
  std::optional<std::vector<std::size_t>> T_list;
  std::vector<std::string> inputs;
};

/// Options after applying flags > config file > defaults.
struct ResolvedOptions {
  nlohmann::json file;  ///< parsed --config contents (object, possibly empty)
  AlgoConfig algo;
  bool algo_given = false;
  std::optional<std::string> dataset;
  std::optional<InstanceSpec> instance;  ///< "instance" object from the config file
  std::optional<std::size_t> T;
  std::size_t reps = kDefaultReps;
  std::uint64_t seed = kDefaultSeed;
  std::filesystem::path out = "results";
  std::size_t jobs = 0;
  std::string suite = "all";
  std::optional<std::size_t> d;
  std::optional<double> epsilon;
  std::vector<std::size_t> T_list;
};

namespace detail {

inline nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config file '" + path + "': " + e.what());
  }
}

template <typename T>
std::optional<T> json_get(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

inline std::optional<std::size_t> env_jobs() {
  const char* v = std::getenv("LINBET_JOBS");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 0) throw ConfigError("LINBET_JOBS must be a nonnegative integer");
  return static_cast<std::size_t>(n);
}

inline void write_manifest(const std::filesystem::path& dir, nlohmann::json body) {
  body["build"] = LINBET_BUILD_ID;
  auto out = open_for_write(dir / "manifest.json");
  out << body.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest in '" + dir.string() + "'");
}

inline std::string fixed(double v, int precision = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

struct FinalStats {
  double mean = 0.0;
  double std = 0.0;
};

inline FinalStats final_regret(const std::vector<RunRecord>& records) {
  FinalStats s;
  if (records.empty()) return s;
  for (const auto& r : records) s.mean += r.cum_regret.empty() ? 0.0 : r.cum_regret.back();
  s.mean /= static_cast<double>(records.size());
  for (const auto& r : records) {
    const double e = (r.cum_regret.empty() ? 0.0 : r.cum_regret.back()) - s.mean;
    s.std += e * e;
  }
  s.std = std::sqrt(s.std / static_cast<double>(records.size()));
  return s;
}

}  // namespace detail

inline ResolvedOptions resolve_options(const CliOptions& cli) {
  ResolvedOptions r;
  r.file = cli.config ? detail::load_config_file(*cli.config) : nlohmann::json::object();
  const auto& f = r.file;

  nlohmann::json algo_json = f.contains("algo_config") ? f.at("algo_config") : f;
  r.algo = parse_algo_config(algo_json);
  r.algo_given = algo_json.contains("algo");
  if (cli.algo) {
    r.algo.algo = parse_algorithm(*cli.algo);
    r.algo_given = true;
  }
  if (cli.lambda) r.algo.lambda = *cli.lambda;
  if (cli.delta) r.algo.delta = *cli.delta;
  if (cli.epsilon) r.algo.epsilon = *cli.epsilon;
  if (cli.moment_bound) r.algo.moment_bound = *cli.moment_bound;
  if (cli.truncation) r.algo.truncation = parse_truncation_convention(*cli.truncation);
  if (!(r.algo.lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(r.algo.delta > 0.0 && r.algo.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (r.algo.epsilon && !(*r.algo.epsilon > 0.0 && *r.algo.epsilon <= 1.0))
    throw ConfigError("epsilon must lie in (0, 1]");
  if (r.algo.moment_bound && !(*r.algo.moment_bound > 0.0)) throw ConfigError("moment bound must be positive");
  r.epsilon = r.algo.epsilon;

  if (f.contains("instance")) {
    try {
      r.instance = parse_instance_spec(f.at("instance"));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed instance: ") + e.what());
    }
  }
  r.dataset = cli.dataset ? cli.dataset : detail::json_get<std::string>(f, "dataset");
  if (cli.dataset) r.instance.reset();
  r.T = cli.T ? cli.T : detail::json_get<std::size_t>(f, "T");
  r.reps = cli.reps.value_or(detail::json_get<std::size_t>(f, "reps").value_or(kDefaultReps));
  r.seed = cli.seed.value_or(detail::json_get<std::uint64_t>(f, "seed").value_or(kDefaultSeed));
  r.out = cli.out.value_or(detail::json_get<std::string>(f, "out").value_or("results"));
  r.suite = cli.suite.value_or(detail::json_get<std::string>(f, "suite").value_or("all"));
  r.d = cli.d ? cli.d : detail::json_get<std::size_t>(f, "d");
  if (cli.T_list) {
    r.T_list = *cli.T_list;
  } else if (auto v = detail::json_get<std::vector<std::size_t>>(f, "T_list")) {
    r.T_list = *v;
  }
  if (cli.jobs) {
    r.jobs = *cli.jobs;
  } else if (auto e = detail::env_jobs()) {
    r.jobs = *e;
  } else {
    r.jobs = detail::json_get<std::size_t>(f, "jobs").value_or(0);
  }
  if (r.reps == 0) throw ConfigError("reps must be positive");
  if (r.T && *r.T == 0) throw ConfigError("T must be positive");
  return r;
}

inline nlohmann::json resolved_to_json(const ResolvedOptions& r) {
  nlohmann::json j = {{"algo_config", algo_config_to_json(r.algo)},
                      {"reps", r.reps},
                      {"seed", r.seed},
                      {"out", r.out.string()}};
  if (r.dataset) j["dataset"] = *r.dataset;
  if (r.T) j["T"] = *r.T;
  return j;
}

/// Runs `reps` repetitions of each algorithm on one instance and writes the
/// per-round, aggregate and plot files. Returns the aggregates.
inline std::vector<AggregateCurve> run_comparison(const BanditInstance& inst, const std::vector<AlgoConfig>& algos,
                                                  std::size_t T, const ResolvedOptions& opt, const std::string& stem,
                                                  nlohmann::json& manifest, std::ostream& log) {
  std::vector<RunRecord> all;
  std::vector<AggregateCurve> curves;
  nlohmann::json runs = nlohmann::json::array();
  log << std::left << std::setw(6) << "algo" << std::setw(10) << "rounds" << std::setw(24) << "final payoff (+-std)"
      << "final regret (+-std)\n";
  for (const auto& cfg : algos) {
    auto records = run_experiment(inst, cfg, T, opt.reps, opt.seed, opt.jobs);
    auto curve = aggregate(records);
    const auto reg = detail::final_regret(records);
    const std::size_t rounds = curve.rounds();
    log << std::left << std::setw(6) << curve.algo << std::setw(10) << rounds << std::setw(24)
        << (detail::fixed(curve.mean_cum_payoff.back()) + " +- " + detail::fixed(curve.std_cum_payoff.back()))
        << detail::fixed(reg.mean) << " +- " << detail::fixed(reg.std) << '\n';
    runs.push_back({{"algo_config", algo_config_to_json(cfg)},
                    {"nominal_rounds", T},
                    {"effective_rounds", rounds},
                    {"final_mean_cum_payoff", curve.mean_cum_payoff.back()},
                    {"final_mean_cum_regret", curve.mean_cum_regret.back()}});
    all.insert(all.end(), std::make_move_iterator(records.begin()), std::make_move_iterator(records.end()));
    curves.push_back(std::move(curve));
  }
  const auto records_path = opt.out / (stem + "_records.csv");
  const auto aggregate_path = opt.out / (stem + "_aggregate.csv");
  const auto plot_path = opt.out / (stem + "_payoff.svg");
  export_csv(all, records_path);
  export_csv(curves, aggregate_path);
  PlotOptions po;
  po.title = inst.name + ": mean cumulative payoff (+-1 std, " + std::to_string(opt.reps) + " reps)";
  emit_plot(curves, plot_path, po);
  manifest["instance"] = instance_to_json(inst);
  manifest["T"] = T;
  manifest["runs"] = runs;
  manifest["files"] = {records_path.filename().string(), aggregate_path.filename().string(),
                       plot_path.filename().string()};
  return curves;
}

inline BanditInstance resolve_instance(const ResolvedOptions& opt, const std::string& fallback_dataset) {
  if (opt.instance) return generate_instance(*opt.instance, opt.seed);
  return generate_instance(parse_dataset_id(opt.dataset.value_or(fallback_dataset)), opt.seed);
}

inline std::string stem_for(const BanditInstance& inst) {
  std::string s;
  for (char c : inst.name) s += std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(c)) : '_';
  return s.empty() ? "custom" : s;
}

/// `run`: one algorithm on one instance.
inline int cmd_run(const ResolvedOptions& opt, std::ostream& log) {
  const auto inst = resolve_instance(opt, "s1");
  const std::size_t T = opt.T.value_or(is_epoch_algorithm(opt.algo.algo) ? 20000 : 10000);
  nlohmann::json manifest = {{"command", "run"}, {"options", resolved_to_json(opt)}};
  log << "run " << inst.name << " T=" << T << " reps=" << opt.reps << " seed=" << opt.seed << '\n';
  const std::string stem = stem_for(inst) + "_" + to_string(opt.algo.algo);
  run_comparison(inst, {opt.algo}, T, opt, stem, manifest, log);
  detail::write_manifest(opt.out, manifest);
  return kExitOk;
}

/// `reproduce`: the published pairing for one of S1-S4.
inline int cmd_reproduce(const ResolvedOptions& opt, std::ostream& log) {
  if (!opt.dataset) throw ConfigError("reproduce needs --dataset (s1, s2, s3 or s4)");
  const DatasetId id = parse_dataset_id(*opt.dataset);
  const auto inst = generate_instance(id, opt.seed);
  const bool finite_variance = id == DatasetId::S1 || id == DatasetId::S2;
  const std::size_t T = opt.T.value_or(finite_variance ? 20000 : 10000);
  AlgoConfig first = opt.algo, second = opt.algo;
  first.algo = finite_variance ? Algorithm::Menu : Algorithm::Tofu;
  second.algo = finite_variance ? Algorithm::Mom : Algorithm::Crt;
  nlohmann::json manifest = {{"command", "reproduce"}, {"options", resolved_to_json(opt)}};
  log << "reproduce " << inst.name << " T=" << T << " reps=" << opt.reps << " seed=" << opt.seed << '\n';
  run_comparison(inst, {first, second}, T, opt, stem_for(inst), manifest, log);
  detail::write_manifest(opt.out, manifest);
  return kExitOk;
}

inline const std::vector<std::string>& validation_suites() {
  static const std::vector<std::string> names = {"weights", "noclip", "mom", "dominance", "moments", "coverage"};
  return names;
}

/// `validate`: fast invariant suite; exit 1 if any check fails.
inline int cmd_validate(const ResolvedOptions& opt, std::ostream& log) {
  const auto& names = validation_suites();
  if (opt.suite != "all" && std::find(names.begin(), names.end(), opt.suite) == names.end())
    throw ConfigError("unknown suite '" + opt.suite + "' (expected all, weights, noclip, mom, dominance, moments or coverage)");
  const auto wanted = [&](const char* s) { return opt.suite == "all" || opt.suite == s; };
  std::vector<CheckResult> results;
  const std::uint64_t seed = opt.seed;
  if (wanted("weights")) results.push_back(check_weight_row_norms(200, {2, 5, 10, 20}, 200, {0.25, 0.5, 1.0}, seed));
  if (wanted("noclip")) results.push_back(check_noclip_identity(100, seed));
  if (wanted("mom")) results.push_back(check_median_of_means_ball(1000, {3, 5, 25, 101}, seed));
  if (wanted("dominance")) results.push_back(check_ellipsoid_dominance(100, 50, seed));
  if (wanted("moments")) results.push_back(check_moment_bounds(20000, seed));
  if (wanted("coverage")) {
    results.push_back(check_lse_coverage(5, 200, 400, opt.algo.menu_constant, 0.05, seed));
    results.push_back(check_tofu_coverage(DatasetId::S3, 20, 200, 0.1, 0.02, seed));
  }
  bool ok = true;
  log << std::left << std::setw(30) << "check" << std::setw(8) << "result" << "detail\n";
  for (const auto& r : results) {
    ok = ok && r.pass;
    log << std::left << std::setw(30) << r.name << std::setw(8) << (r.pass ? "PASS" : "FAIL") << r.detail << " ["
        << detail::fixed(r.seconds, 1) << " s]\n";
  }
  return ok ? kExitOk : kExitValidation;
}

/// `lowerbound`: MENU and TOFU on the hard instance; reports measured regret vs the floor.
inline int cmd_lowerbound(const ResolvedOptions& opt, std::ostream& log) {
  const std::size_t d = opt.d.value_or(2);
  const double eps = opt.epsilon.value_or(1.0);
  const std::size_t T = opt.T.value_or(10000);
  const std::size_t reps = opt.reps;
  if (d == 0 || d % 2 != 0) throw ConfigError("lowerbound: d must be a positive even number");
  if (!(eps > 0.0 && eps <= 1.0)) throw ConfigError("lowerbound: epsilon must lie in (0, 1]");
  // Validates T against the construction's minimum horizon before any run.
  (void)lower_bound_instance(d, eps, T, opt.seed);
  const double floor = lower_bound_regret_floor(d, eps, T);

  std::vector<Algorithm> algos = {Algorithm::Menu, Algorithm::Tofu};
  if (opt.algo_given) algos = {opt.algo.algo};
  nlohmann::json manifest = {{"command", "lowerbound"}, {"options", resolved_to_json(opt)}, {"d", d},
                             {"epsilon", eps},          {"T", T},                         {"floor", floor}};
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream csv;
  csv << "algo,d,epsilon,T,reps,effective_rounds,floor,mean_regret,std_regret,se_regret\n";
  log << "lowerbound d=" << d << " epsilon=" << eps << " T=" << T << " reps=" << reps
      << " floor=(d/192)T^{1/(1+eps)}=" << detail::fixed(floor, 4) << '\n';
  for (Algorithm a : algos) {
    AlgoConfig cfg = opt.algo;
    cfg.algo = a;
    cfg.epsilon = eps;
    std::vector<RunRecord> records(reps);
    parallel_for(reps, opt.jobs, [&](std::size_t r) {
      const auto lb = lower_bound_instance(d, eps, T, derive_seed(opt.seed, r));
      records[r] = run_repetition(to_bandit_instance(lb), cfg, T, r, opt.seed);
    });
    const auto s = detail::final_regret(records);
    const double se = s.std / std::sqrt(static_cast<double>(reps));
    const std::size_t rounds = records.front().rounds();
    log << "  " << std::left << std::setw(6) << to_string(a) << "rounds=" << rounds
        << " mean regret=" << detail::fixed(s.mean, 4) << " (se " << detail::fixed(se, 4) << ")"
        << (s.mean >= floor - 2.0 * se ? " >= floor" : " BELOW floor") << '\n';
    csv << to_string(a) << ',' << d << ',' << format_double(eps) << ',' << T << ',' << reps << ',' << rounds << ','
        << format_double(floor) << ',' << format_double(s.mean) << ',' << format_double(s.std) << ','
        << format_double(se) << '\n';
    rows.push_back({{"algo", to_string(a)}, {"mean_regret", s.mean}, {"se_regret", se}, {"effective_rounds", rounds}});
  }
  auto out = detail::open_for_write(opt.out / "lowerbound.csv");
  out << csv.str();
  if (!out) throw IoError("failed writing lowerbound.csv");
  manifest["results"] = rows;
  manifest["files"] = {"lowerbound.csv"};
  detail::write_manifest(opt.out, manifest);
  return kExitOk;
}

/// `scaling`: final mean regret across horizons and the fitted log-log slope.
inline int cmd_scaling(const ResolvedOptions& opt, std::ostream& log, std::ostream& warn) {
  std::vector<std::size_t> Ts = opt.T_list;
  if (Ts.empty()) Ts = {1024, 2048, 4096, 8192, 16384};
  std::set<std::size_t> seen;
  std::vector<std::size_t> unique;
  for (std::size_t T : Ts) {
    if (T == 0) throw ConfigError("scaling: horizons must be positive");
    if (seen.insert(T).second)
      unique.push_back(T);
    else
      warn << "warning: duplicate horizon " << T << " dropped\n";
  }
  std::sort(unique.begin(), unique.end());
  if (unique.size() < 4) throw ConfigError("scaling: need at least 4 distinct horizons");

  BanditInstance inst;
  if (opt.instance || opt.dataset) {
    inst = resolve_instance(opt, "s1");
  } else {
    const double eps = opt.epsilon.value_or(1.0);
    NoiseModel noise = eps >= 1.0 ? NoiseModel{StudentT{3.0, 0.0, 1.0}} : NoiseModel{ParetoPayoff{2.0}};
    inst = generate_instance(CustomSpec{20, 10, noise, eps}, opt.seed);
    inst.name = "scaling-d10";
  }
  for (std::size_t T : unique) check_run_config(opt.algo, T);

  nlohmann::json manifest = {{"command", "scaling"}, {"options", resolved_to_json(opt)},
                             {"instance", instance_to_json(inst)}, {"T_list", unique}};
  std::ostringstream points;
  points << "algo,T,effective_rounds,mean_final_regret,std_final_regret,reps\n";
  std::vector<std::pair<double, double>> xy;
  log << "scaling " << to_string(opt.algo.algo) << " on " << inst.name << " reps=" << opt.reps << '\n';
  for (std::size_t T : unique) {
    const auto records = run_experiment(inst, opt.algo, T, opt.reps, opt.seed, opt.jobs);
    const auto s = detail::final_regret(records);
    const std::size_t rounds = records.front().rounds();
    log << "  T=" << std::left << std::setw(8) << T << "rounds=" << std::setw(8) << rounds
        << "mean regret=" << detail::fixed(s.mean) << '\n';
    points << to_string(opt.algo.algo) << ',' << T << ',' << rounds << ',' << format_double(s.mean) << ','
           << format_double(s.std) << ',' << opt.reps << '\n';
    xy.emplace_back(static_cast<double>(T), s.mean);
  }
  const auto fit = fit_scaling_exponent(xy);
  if (fit.excluded > 0) warn << "warning: " << fit.excluded << " nonpositive regret point(s) excluded from the fit\n";
  log << "slope=" << detail::fixed(fit.slope, 4) << " intercept=" << detail::fixed(fit.intercept, 4)
      << " r2=" << detail::fixed(fit.r2, 4) << '\n';

  auto pts = detail::open_for_write(opt.out / "scaling_points.csv");
  pts << points.str();
  if (!pts) throw IoError("failed writing scaling_points.csv");
  auto fo = detail::open_for_write(opt.out / "scaling_fit.csv");
  fo << "algo,slope,intercept,r2,points_used,points_excluded\n"
     << to_string(opt.algo.algo) << ',' << format_double(fit.slope) << ',' << format_double(fit.intercept) << ','
     << format_double(fit.r2) << ',' << fit.used << ',' << fit.excluded << '\n';
  if (!fo) throw IoError("failed writing scaling_fit.csv");
  manifest["fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}};
  manifest["files"] = {"scaling_points.csv", "scaling_fit.csv"};
  detail::write_manifest(opt.out, manifest);
  return kExitOk;
}

/// `plot`: SVG from one or more aggregate CSV files.
inline int cmd_plot(const std::vector<std::string>& inputs, const ResolvedOptions& opt, std::ostream& log) {
  if (inputs.empty()) throw ConfigError("plot needs --input <aggregate.csv>");
  std::vector<AggregateCurve> curves;
  for (const auto& path : inputs) {
    if (!std::filesystem::exists(path)) throw ConfigError("no such input file '" + path + "'");
    auto c = read_aggregate_csv(path);
    curves.insert(curves.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
  }
  if (curves.empty()) throw ConfigError("input files hold no curves");
  const auto target = opt.out / "payoff.svg";
  PlotOptions po;
  po.title = curves.front().dataset + ": mean cumulative payoff";
  emit_plot(curves, target, po);
  log << "wrote " << target.string() << " (" << curves.size() << " series)\n";
  return kExitOk;
}

/// Maps exceptions from a command body to exit codes.
template <typename Fn>
int run_guarded(Fn&& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidInput& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "runtime failure: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace linbet
