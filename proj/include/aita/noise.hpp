#pragma once

// Belief noise and the explanation-length experiments built on it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aita/alloc.hpp"
#include "aita/counterfactual.hpp"
#include "aita/explanation.hpp"
#include "aita/format.hpp"
#include "aita/negotiation.hpp"

namespace aita {

// Random perturbs in any direction; optimistic noise overestimates
// teammates' costs, pessimistic noise underestimates them.
enum class NoiseMode { Random, Optimistic, Pessimistic };

inline std::string_view to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::Random: return "random";
    case NoiseMode::Optimistic: return "ON";
    case NoiseMode::Pessimistic: return "PN";
  }
  return "?";
}

inline NoiseMode parse_noise_mode(std::string_view s) {
  if (s == "random") return NoiseMode::Random;
  if (s == "ON" || s == "optimistic") return NoiseMode::Optimistic;
  if (s == "PN" || s == "pessimistic") return NoiseMode::Pessimistic;
  throw Error("unknown noise mode '" + std::string(s) + "'");
}

struct NoiseConfig {
  NoiseMode mode = NoiseMode::Random;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  int trials = 1;
};

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for one cell of an experiment grid: each coordinate is folded into
// the master seed through splitmix64, so cells can run in any order.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

// Draws a cost vector uniformly from the l2 ball of radius
// epsilon * max(truth) around `truth`, restricted to non-negative costs.
// Optimistic and pessimistic modes fold the offset into the orthant that
// only raises (resp. lowers) every component; folding a uniform ball sample
// by sign is uniform on that orthant of the ball. Pessimistic samples are
// then clipped at zero, which only shrinks the offset. Incapable (infinite)
// entries are left untouched and ignored when scaling the radius.
inline std::vector<double> sample_noisy_costs(std::span<const double> truth, double epsilon,
                                              NoiseMode mode, Rng& rng) {
  if (!(epsilon >= 0.0)) throw Error("noise radius must be non-negative");
  std::vector<double> out(truth.begin(), truth.end());
  double scale = 0.0;
  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k] < 0) throw Error("true costs must be non-negative");
    if (std::isfinite(truth[k])) {
      scale = std::max(scale, truth[k]);
      free.push_back(k);
    }
  }
  const double radius = epsilon * scale;
  if (radius == 0.0 || free.empty()) return out;

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> direction(free.size());
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& d : direction) {
      d = gauss(rng);
      norm += d * d;
    }
    norm = std::sqrt(norm);
  } while (norm == 0.0);
  const double magnitude =
      radius * std::pow(unit(rng), 1.0 / static_cast<double>(free.size()));

  for (std::size_t k = 0; k < free.size(); ++k) {
    double offset = direction[k] / norm * magnitude;
    if (mode == NoiseMode::Optimistic) offset = std::abs(offset);
    if (mode == NoiseMode::Pessimistic) offset = -std::abs(offset);
    out[free[k]] = std::max(0.0, truth[free[k]] + offset);
  }
  return out;
}

// Belief of `owner`: rows of agents in `exact` (and the owner's own row) are
// copied, all other human rows are noisy. A table-kind performance model is
// noisy unless the allocator's index is in `exact`; derived kinds follow the
// believed rows.
inline BeliefModel build_belief_model(const Scenario& scenario, AgentId owner,
                                      const std::set<int>& exact, const NoiseConfig& noise,
                                      Rng& rng) {
  if (!scenario.is_human(owner)) throw Error("belief owner must be a human");
  BeliefModel b;
  b.owner = owner;
  b.exact = exact;
  b.exact.insert(owner.value);
  b.believed_performance = scenario.performance();
  for (int i = 0; i < scenario.num_humans(); ++i) {
    auto row = scenario.cost_row(AgentId(i));
    if (b.exact.contains(i)) {
      b.believed_costs.emplace_back(row.begin(), row.end());
    } else {
      b.believed_costs.push_back(sample_noisy_costs(row, noise.epsilon, noise.mode, rng));
    }
  }
  if (scenario.performance().kind == PerformanceKind::Table &&
      !b.exact.contains(scenario.num_humans())) {
    b.believed_performance.values =
        sample_noisy_costs(scenario.performance().values, noise.epsilon, noise.mode, rng);
  }
  return b;
}

struct SweepRow {
  double epsilon = 0.0;        // noise radius (mu in subset sweeps)
  std::optional<int> subset;   // subset sweeps only
  NoiseMode mode = NoiseMode::Random;
  int trial = 0;
  int agent = 0;
  int length = 0;              // 0 when no counterfactual exists
  bool guarantee_held = true;  // false when the replay ended cheaper for the questioner
  bool operator==(const SweepRow&) const = default;
};

struct SweepAggregate {
  double epsilon = 0.0;
  std::optional<int> subset;
  int count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single sample
  std::optional<double> relative_mean;
  std::optional<double> relative_stddev;
  bool operator==(const SweepAggregate&) const = default;

  double standard_error() const { return count > 0 ? stddev / std::sqrt(count) : 0.0; }
  double relative_standard_error() const {
    return count > 0 && relative_stddev ? *relative_stddev / std::sqrt(count) : 0.0;
  }
};

enum class SweepKind { Noise, Subset };

struct SweepResult {
  SweepKind kind = SweepKind::Noise;
  NoiseMode mode = NoiseMode::Random;
  std::optional<double> normalizer;
  std::vector<SweepRow> rows;
  std::vector<SweepAggregate> aggregates;
  bool operator==(const SweepResult&) const = default;

  int guarantee_violations() const {
    return static_cast<int>(std::count_if(rows.begin(), rows.end(),
                                          [](const SweepRow& r) { return !r.guarantee_held; }));
  }

  const SweepAggregate* find(double epsilon, std::optional<int> subset = std::nullopt) const {
    for (const SweepAggregate& a : aggregates)
      if (a.epsilon == epsilon && a.subset == subset) return &a;
    return nullptr;
  }
};

namespace detail {

inline std::pair<double, double> mean_stddev(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace detail

// Groups rows by (epsilon, subset) in order of first appearance.
inline std::vector<SweepAggregate> aggregate_rows(const std::vector<SweepRow>& rows,
                                                  std::optional<double> normalizer) {
  std::vector<std::pair<double, std::optional<int>>> keys;
  std::vector<std::vector<double>> samples;
  for (const SweepRow& r : rows) {
    auto key = std::make_pair(r.epsilon, r.subset);
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      samples.emplace_back();
      it = keys.end() - 1;
    }
    samples[static_cast<std::size_t>(it - keys.begin())].push_back(r.length);
  }
  std::vector<SweepAggregate> out;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    SweepAggregate a;
    a.epsilon = keys[k].first;
    a.subset = keys[k].second;
    a.count = static_cast<int>(samples[k].size());
    std::tie(a.mean, a.stddev) = detail::mean_stddev(samples[k]);
    if (normalizer) {
      std::vector<double> rel;
      for (double x : samples[k]) rel.push_back(x / *normalizer);
      auto [m, sd] = detail::mean_stddev(rel);
      a.relative_mean = m;
      a.relative_stddev = sd;
    }
    out.push_back(a);
  }
  return out;
}

struct LengthSample {
  int length = 0;
  bool guarantee_held = true;
};

// Explanation length for one human against the fair allocation, or 0 when
// their beliefs yield no counterfactual. A replay that breaks the cost
// guarantee still has a length; it is reported with the flag cleared.
inline LengthSample explanation_length_for(const Scenario& scenario, const BeliefModel& belief,
                                           const Allocation& fair, double discount) {
  auto cf = optimal_counterfactual(scenario, belief, fair, discount);
  if (!cf) return {};
  try {
    return {explain(scenario, fair, cf->foil, belief.owner, discount).length, true};
  } catch (const ExplanationGuaranteeViolated& e) {
    return {e.partial().length, false};
  }
}

// For every epsilon and trial, each human draws beliefs (own row exact,
// teammates noisy) and questions the fair allocation. The fair allocation
// uses true costs only and is computed once.
inline SweepResult run_noise_sweep(const Scenario& scenario, const std::vector<double>& epsilons,
                                   NoiseMode mode, int trials, double discount, std::uint64_t seed,
                                   std::optional<double> normalizer = std::nullopt) {
  if (trials < 1) throw Error("trials must be at least 1");
  if (normalizer && !(*normalizer > 0)) throw Error("normalizer must be positive");
  check_enumeration_cap(scenario.num_humans(), scenario.num_tasks());
  const Allocation fair = fair_allocation(scenario).allocation;

  SweepResult result;
  result.kind = SweepKind::Noise;
  result.mode = mode;
  result.normalizer = normalizer;
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    for (int t = 0; t < trials; ++t) {
      Rng rng(derive_seed(seed, {e, static_cast<std::uint64_t>(t)}));
      NoiseConfig noise{mode, epsilons[e], seed, trials};
      for (int i = 0; i < scenario.num_humans(); ++i) {
        BeliefModel belief = build_belief_model(scenario, AgentId(i), {}, noise, rng);
        LengthSample len = explanation_length_for(scenario, belief, fair, discount);
        result.rows.push_back({epsilons[e], std::nullopt, mode, t, i, len.length, len.guarantee_held});
      }
    }
  }
  result.aggregates = aggregate_rows(result.rows, normalizer);
  return result;
}

// For every noise radius mu, subset size k and trial, each human knows a
// uniformly drawn k-subset of teammates exactly and holds pessimistic
// beliefs of radius mu about everyone else (the performance table included).
inline SweepResult run_subset_sweep(const Scenario& scenario, const std::vector<int>& subset_sizes,
                                    const std::vector<double>& mus, int trials, double discount,
                                    std::uint64_t seed, std::optional<double> normalizer) {
  if (trials < 1) throw Error("trials must be at least 1");
  if (normalizer && !(*normalizer > 0)) throw Error("normalizer must be positive");
  const int n = scenario.num_humans();
  for (int k : subset_sizes) {
    if (k < 0 || k > n - 1) {
      throw Error("subset size " + std::to_string(k) + " exceeds the " + std::to_string(n - 1) +
                  " teammates available");
    }
  }
  check_enumeration_cap(n, scenario.num_tasks());
  const Allocation fair = fair_allocation(scenario).allocation;

  SweepResult result;
  result.kind = SweepKind::Subset;
  result.mode = NoiseMode::Pessimistic;
  result.normalizer = normalizer;
  for (std::size_t u = 0; u < mus.size(); ++u) {
    for (int k : subset_sizes) {
      for (int t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, {u, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(t)}));
        NoiseConfig noise{NoiseMode::Pessimistic, mus[u], seed, trials};
        for (int i = 0; i < n; ++i) {
          std::vector<int> mates;
          for (int j = 0; j < n; ++j)
            if (j != i) mates.push_back(j);
          std::shuffle(mates.begin(), mates.end(), rng);
          std::set<int> exact(mates.begin(), mates.begin() + k);
          BeliefModel belief = build_belief_model(scenario, AgentId(i), exact, noise, rng);
          LengthSample len = explanation_length_for(scenario, belief, fair, discount);
          result.rows.push_back(
              {mus[u], k, NoiseMode::Pessimistic, t, i, len.length, len.guarantee_held});
        }
      }
    }
  }
  result.aggregates = aggregate_rows(result.rows, normalizer);
  return result;
}

inline std::string to_csv(const SweepResult& r) {
  std::ostringstream out;
  if (r.kind == SweepKind::Noise) {
    out << "epsilon,mode,trial,agent,expl_length\n";
    for (const SweepRow& row : r.rows) {
      out << format_number(row.epsilon) << ',' << to_string(row.mode) << ',' << row.trial << ','
          << row.agent << ',' << row.length << '\n';
    }
    out << "\nepsilon,mean,stddev\n";
    for (const SweepAggregate& a : r.aggregates) {
      out << format_number(a.epsilon) << ',' << format_number(a.mean) << ','
          << format_number(a.stddev) << '\n';
    }
    return out.str();
  }
  out << "mu,subset,mode,trial,agent,expl_length,rel_length\n";
  for (const SweepRow& row : r.rows) {
    out << format_number(row.epsilon) << ',' << row.subset.value_or(0) << ',' << to_string(row.mode)
        << ',' << row.trial << ',' << row.agent << ',' << row.length << ',';
    if (r.normalizer) out << format_number(row.length / *r.normalizer);
    out << '\n';
  }
  out << "\nmu,subset,mean,stddev,rel_mean,rel_stddev\n";
  for (const SweepAggregate& a : r.aggregates) {
    out << format_number(a.epsilon) << ',' << a.subset.value_or(0) << ',' << format_number(a.mean)
        << ',' << format_number(a.stddev) << ',';
    if (a.relative_mean) out << format_number(*a.relative_mean);
    out << ',';
    if (a.relative_stddev) out << format_number(*a.relative_stddev);
    out << '\n';
  }
  return out.str();
}

inline void export_csv(const SweepResult& r, const std::string& path) {
  if (r.rows.empty()) throw Error("refusing to export an empty sweep result");
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot write " + path);
  file << to_csv(r);
  if (!file) throw Error("failed writing " + path);
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("spearman needs two equal-length series");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t s = 0; s < idx.size();) {
      std::size_t e = s;
      while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[s]]) ++e;
      double avg = (static_cast<double>(s) + static_cast<double>(e)) / 2.0 + 1.0;
      for (std::size_t k = s; k <= e; ++k) r[idx[k]] = avg;
      s = e + 1;
    }
    return r;
  };
  auto rx = ranks(x), ry = ranks(y);
  auto [mx, sx] = detail::mean_stddev(rx);
  auto [my, sy] = detail::mean_stddev(ry);
  if (sx == 0.0 || sy == 0.0) return 0.0;
  double cov = 0.0;
  for (std::size_t k = 0; k < rx.size(); ++k) cov += (rx[k] - mx) * (ry[k] - my);
  cov /= static_cast<double>(rx.size() - 1);
  return cov / (sx * sy);
}

}  // namespace aita
