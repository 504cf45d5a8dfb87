#pragma once

// Seeded multi-repetition runner, aggregation, scaling fits and CSV export.
//
// Every repetition r gets seed repetition_seed(root, r); the payoff noise for
// round t (1-based) is drawn from round_rng(seed, t). All policies compared
// on one instance therefore see the same noise stream round by round.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

#include "linbet/environments.hpp"
#include "linbet/errors.hpp"
#include "linbet/policy.hpp"
#include "linbet/random.hpp"

namespace linbet {

struct RunRecord {
  std::string dataset;
  std::string algo;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::size_t horizon = 0;  ///< nominal T; epoch policies may play fewer rounds
  std::vector<std::uint32_t> arm;
  std::vector<double> payoff;
  std::vector<double> cum_payoff;
  std::vector<double> cum_regret;  ///< pseudo-regret sum of (x*^T theta* - x_t^T theta*)
  double wall_seconds = 0.0;

  std::size_t rounds() const noexcept { return arm.size(); }
};

/// Rejects configurations the policy's guarantees do not cover.
inline void check_run_config(const AlgoConfig& cfg, std::size_t T) {
  if (T == 0) throw ConfigError("horizon T must be positive");
  if (cfg.algo == Algorithm::Menu && !cfg.groups) check_menu_horizon(T, cfg.delta);
}

/// Plays one repetition; the policy is rebuilt from scratch.
inline RunRecord run_repetition(const BanditInstance& inst, const AlgoConfig& cfg, std::size_t T, std::size_t rep,
                                std::uint64_t root_seed) {
  check_run_config(cfg, T);
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.dataset = inst.name;
  rec.algo = to_string(cfg.algo);
  rec.rep = rep;
  rec.seed = repetition_seed(root_seed, rep);
  rec.horizon = T;

  auto policy = make_policy(cfg, inst, T);
  const std::size_t pulls = policy->pulls_per_decision();
  const std::size_t total = policy->effective_rounds();
  rec.arm.reserve(total);
  rec.payoff.reserve(total);
  rec.cum_payoff.reserve(total);
  rec.cum_regret.reserve(total);

  const Vector means = inst.means();
  const double best = means.maxCoeff();
  std::vector<double> payoffs(pulls);
  double cum_payoff = 0.0, cum_regret = 0.0;
  std::uint64_t round = 0;
  for (std::size_t n = 0; n < policy->decisions(); ++n) {
    const std::size_t a = policy->select(inst.arms);
    const double gap = best - means(static_cast<Eigen::Index>(a));
    for (std::size_t j = 0; j < pulls; ++j) {
      Rng rng = round_rng(rec.seed, ++round);
      payoffs[j] = sample_payoff(inst, a, rng);
      cum_payoff += payoffs[j];
      cum_regret += gap;
      rec.arm.push_back(static_cast<std::uint32_t>(a));
      rec.payoff.push_back(payoffs[j]);
      rec.cum_payoff.push_back(cum_payoff);
      rec.cum_regret.push_back(cum_regret);
    }
    policy->update(inst.arm(a), payoffs);
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

/// Runs `jobs` worker threads over indices [0, count); results land by index.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// `reps` independent repetitions; output is deterministic in root_seed regardless of `jobs`.
inline std::vector<RunRecord> run_experiment(const BanditInstance& inst, const AlgoConfig& cfg, std::size_t T,
                                             std::size_t reps, std::uint64_t root_seed, std::size_t jobs = 0) {
  check_run_config(cfg, T);
  std::vector<RunRecord> records(reps);
  parallel_for(reps, jobs, [&](std::size_t r) { records[r] = run_repetition(inst, cfg, T, r, root_seed); });
  return records;
}

// ---------------------------------------------------------------------------
// Aggregation

struct AggregateCurve {
  std::string dataset;
  std::string algo;
  std::size_t reps = 0;
  std::vector<double> mean_cum_payoff;
  std::vector<double> std_cum_payoff;
  std::vector<double> mean_cum_regret;
  std::vector<double> std_cum_regret;

  std::size_t rounds() const noexcept { return mean_cum_payoff.size(); }
};

/// Pointwise mean and population standard deviation across repetitions.
inline AggregateCurve aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw InvalidInput("aggregate: no records");
  const auto& first = records.front();
  for (const auto& r : records)
    if (r.dataset != first.dataset || r.algo != first.algo || r.horizon != first.horizon ||
        r.rounds() != first.rounds())
      throw ConfigError("aggregate: records come from different configurations");

  AggregateCurve out;
  out.dataset = first.dataset;
  out.algo = first.algo;
  out.reps = records.size();
  const std::size_t n = first.rounds();
  out.mean_cum_payoff.assign(n, 0.0);
  out.std_cum_payoff.assign(n, 0.0);
  out.mean_cum_regret.assign(n, 0.0);
  out.std_cum_regret.assign(n, 0.0);
  // Welford, one pass per round over repetitions.
  for (std::size_t t = 0; t < n; ++t) {
    double mp = 0.0, sp = 0.0, mr = 0.0, sr = 0.0;
    double count = 0.0;
    for (const auto& r : records) {
      count += 1.0;
      const double dp = r.cum_payoff[t] - mp;
      mp += dp / count;
      sp += dp * (r.cum_payoff[t] - mp);
      const double dr = r.cum_regret[t] - mr;
      mr += dr / count;
      sr += dr * (r.cum_regret[t] - mr);
    }
    out.mean_cum_payoff[t] = mp;
    out.std_cum_payoff[t] = std::sqrt(std::max(0.0, sp / count));
    out.mean_cum_regret[t] = mr;
    out.std_cum_regret[t] = std::sqrt(std::max(0.0, sr / count));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scaling fit

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  ///< nonpositive points dropped
};

/// Least squares of log(regret) on log(T).
inline ScalingFit fit_scaling_exponent(const std::vector<std::pair<double, double>>& points) {
  ScalingFit fit;
  std::vector<std::pair<double, double>> logs;
  for (const auto& [T, R] : points) {
    if (!(T > 0.0) || !(R > 0.0)) {
      ++fit.excluded;
      continue;
    }
    logs.emplace_back(std::log(T), std::log(R));
  }
  if (logs.size() < 4) throw ConfigError("fit_scaling_exponent: need at least 4 positive points");
  const double n = static_cast<double>(logs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : logs) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : logs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw ConfigError("fit_scaling_exponent: horizons must differ");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (const auto& [x, y] : logs) {
    const double e = y - (fit.intercept + fit.slope * x);
    sse += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.used = logs.size();
  return fit;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kRecordCsvHeader = "dataset,algo,rep,seed,t,arm,payoff,cum_payoff,cum_regret";
inline constexpr const char* kAggregateCsvHeader =
    "dataset,algo,t,mean_cum_payoff,std_cum_payoff,mean_cum_regret,std_cum_regret,reps";

/// Shortest round-trip-safe form with at most 17 significant digits.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("malformed number '" + std::string(s) + "' in CSV");
  return v;
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace detail

inline void export_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  std::string buf;
  buf.reserve(1 << 16);
  out << kRecordCsvHeader << '\n';
  for (const auto& r : records) {
    const std::string prefix = r.dataset + ',' + r.algo + ',' + std::to_string(r.rep) + ',' + std::to_string(r.seed) + ',';
    for (std::size_t t = 0; t < r.rounds(); ++t) {
      buf += prefix;
      buf += std::to_string(t + 1);
      buf += ',';
      buf += std::to_string(r.arm[t]);
      buf += ',';
      buf += format_double(r.payoff[t]);
      buf += ',';
      buf += format_double(r.cum_payoff[t]);
      buf += ',';
      buf += format_double(r.cum_regret[t]);
      buf += '\n';
      if (buf.size() > (1 << 15)) {
        out << buf;
        buf.clear();
      }
    }
  }
  out << buf;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline void export_csv(const std::vector<AggregateCurve>& curves, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  out << kAggregateCsvHeader << '\n';
  for (const auto& c : curves) {
    for (std::size_t t = 0; t < c.rounds(); ++t) {
      out << c.dataset << ',' << c.algo << ',' << (t + 1) << ',' << format_double(c.mean_cum_payoff[t]) << ','
          << format_double(c.std_cum_payoff[t]) << ',' << format_double(c.mean_cum_regret[t]) << ','
          << format_double(c.std_cum_regret[t]) << ',' << c.reps << '\n';
    }
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline void export_csv(const AggregateCurve& curve, const std::filesystem::path& path) {
  export_csv(std::vector<AggregateCurve>{curve}, path);
}

/// Reads an aggregate CSV back; curves keep their order of first appearance.
inline std::vector<AggregateCurve> read_aggregate_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kAggregateCsvHeader) throw IoError("unexpected aggregate CSV header");
  std::vector<AggregateCurve> curves;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 8) throw IoError("aggregate CSV row has " + std::to_string(f.size()) + " fields");
    const auto key = std::make_pair(std::string(f[0]), std::string(f[1]));
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, curves.size()).first;
      curves.push_back({key.first, key.second, 0, {}, {}, {}, {}});
    }
    auto& c = curves[it->second];
    c.mean_cum_payoff.push_back(parse_double(f[3]));
    c.std_cum_payoff.push_back(parse_double(f[4]));
    c.mean_cum_regret.push_back(parse_double(f[5]));
    c.std_cum_regret.push_back(parse_double(f[6]));
    c.reps = static_cast<std::size_t>(parse_double(f[7]));
  }
  return curves;
}

/// Reads a per-round CSV back into records (wall time is not stored).
inline std::vector<RunRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kRecordCsvHeader) throw IoError("unexpected record CSV header");
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 9) throw IoError("record CSV row has " + std::to_string(f.size()) + " fields");
    const auto rep = static_cast<std::size_t>(std::stoull(std::string(f[2])));
    if (records.empty() || records.back().rep != rep || records.back().algo != f[1] ||
        records.back().dataset != f[0]) {
      RunRecord r;
      r.dataset = std::string(f[0]);
      r.algo = std::string(f[1]);
      r.rep = rep;
      r.seed = std::stoull(std::string(f[3]));
      records.push_back(std::move(r));
    }
    auto& r = records.back();
    r.arm.push_back(static_cast<std::uint32_t>(std::stoul(std::string(f[5]))));
    r.payoff.push_back(parse_double(f[6]));
    r.cum_payoff.push_back(parse_double(f[7]));
    r.cum_regret.push_back(parse_double(f[8]));
    r.horizon = r.arm.size();
  }
  return records;
}

}  // namespace linbet
