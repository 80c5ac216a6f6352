#pragma once

// Test-only helpers: a seeded scenario generator and a brute-force
// backward-induction oracle that shares no code with the engine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "aita/alloc.hpp"

namespace testsupport {

inline aita::Scenario random_scenario(std::uint64_t seed, int n, int m, double discount = 0.9) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> costs(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m)));
  for (auto& row : costs)
    for (double& c : row) c = u(rng);
  std::vector<std::string> tasks;
  for (int j = 0; j < m; ++j) tasks.push_back("t" + std::to_string(j + 1));
  return aita::Scenario(n, tasks, costs, {}, discount);
}

inline aita::Scenario table3(aita::PerformanceKind kind = aita::PerformanceKind::Makespan) {
  return aita::Scenario(2, {"t1", "t2", "t3", "t4", "t5"},
                        {{0.3, 0.5, 0.4, 0.077, 0.8}, {0.4, 0.7, 0.077, 0.49, 0.13}},
                        {kind, {}}, 0.9);
}

namespace oracle {

using Cost = std::function<double(const std::string& alloc, int agent)>;

inline std::vector<std::string> all_strings(int n, int m) {
  std::vector<std::string> out{""};
  for (int j = 0; j < m; ++j) {
    std::vector<std::string> next;
    for (const std::string& prefix : out)
      for (int d = 0; d < n; ++d) next.push_back(prefix + static_cast<char>('0' + d));
    out = std::move(next);
  }
  return out;
}

inline std::vector<std::string> one_edit(const std::string& o, int n) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < o.size(); ++j)
    for (int d = 0; d < n; ++d)
      if (o[j] != '0' + d) {
        std::string x = o;
        x[j] = static_cast<char>('0' + d);
        out.push_back(x);
      }
  std::sort(out.begin(), out.end());
  return out;
}

// Sum of a human's row over the tasks it holds.
inline double row_sum(const std::vector<double>& row, const std::string& o, int human) {
  double s = 0;
  for (std::size_t j = 0; j < o.size(); ++j)
    if (o[j] - '0' == human) s += row[j];
  return s;
}

inline Cost makespan_cost(const std::vector<std::vector<double>>& rows) {
  return [rows](const std::string& o, int agent) {
    int n = static_cast<int>(rows.size());
    if (agent < n) return row_sum(rows[agent], o, agent);
    double worst = 0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, row_sum(rows[i], o, i));
    return worst;
  };
}

inline bool no_worse(double a, double b) { return a <= b + 1e-9 * std::max(std::abs(a), std::abs(b)); }

struct Game {
  int agents = 0;           // humans + allocator
  std::vector<int> order;   // proposer cycle
  std::vector<std::string> pool;
  std::optional<std::string> root;
  Cost cost;
  double delta = 0.9;
};

inline std::vector<std::string> offers(const Game& g) {
  std::vector<std::string> left = g.pool;
  std::sort(left.begin(), left.end());
  std::vector<std::string> out;
  if (g.root) {
    out.push_back(*g.root);
    left.erase(std::find(left.begin(), left.end(), *g.root));
  }
  while (!left.empty()) {
    int proposer = g.order[out.size() % g.order.size()];
    std::size_t best = 0;
    for (std::size_t k = 1; k < left.size(); ++k) {
      double a = g.cost(left[k], proposer), b = g.cost(left[best], proposer);
      if (!no_worse(b, a)) best = k;
    }
    out.push_back(left[best]);
    left.erase(left.begin() + static_cast<long>(best));
  }
  return out;
}

inline std::pair<std::string, int> settle(const Game& g, const std::vector<std::string>& seq, int s) {
  if (s + 1 == static_cast<int>(seq.size())) return {seq[s], s};
  auto later = settle(g, seq, s + 1);
  int proposer = g.order[s % g.order.size()];
  for (int a = 0; a < g.agents; ++a) {
    if (a == proposer) continue;
    double now = g.cost(seq[s], a) / std::pow(g.delta, s);
    double wait = g.cost(later.first, a) / std::pow(g.delta, later.second);
    if (!no_worse(now, wait)) return later;
  }
  return {seq[s], s};
}

inline std::pair<std::string, int> solve(const Game& g) { return settle(g, offers(g), 0); }

inline std::vector<int> allocator_first(int n) {
  std::vector<int> order{n};
  for (int i = 0; i < n; ++i) order.push_back(i);
  return order;
}

inline std::vector<int> questioner_first(int n, int i) {
  std::vector<int> order;
  for (int k = 0; k < n; ++k) order.push_back((i + k) % n);
  order.push_back(n);
  return order;
}

inline std::pair<std::string, int> fair(const std::vector<std::vector<double>>& rows, int m, double delta) {
  int n = static_cast<int>(rows.size());
  return solve({n + 1, allocator_first(n), all_strings(n, m), std::nullopt, makespan_cost(rows), delta});
}

// Foil the questioner reaches under believed rows, or nullopt.
inline std::optional<std::string> counterfactual(const std::vector<std::vector<double>>& true_rows,
                                                 const std::vector<std::vector<double>>& believed_rows,
                                                 const std::string& o, int i, double delta) {
  int n = static_cast<int>(true_rows.size());
  std::vector<std::string> pool = one_edit(o, n);
  pool.push_back(o);
  auto [foil, step] = solve({n + 1, questioner_first(n, i), pool, std::nullopt, makespan_cost(believed_rows), delta});
  (void)step;
  if (foil == o) return std::nullopt;
  if (!(row_sum(true_rows[i], foil, i) < row_sum(true_rows[i], o, i))) return std::nullopt;
  return foil;
}

struct Replay {
  std::string final_allocation;
  int length = 0;
};

inline Replay replay(const std::vector<std::vector<double>>& rows, int m, const std::string& o,
                     const std::string& foil, int i, double delta) {
  int n = static_cast<int>(rows.size());
  std::vector<std::string> pool = all_strings(n, m);
  pool.erase(std::find(pool.begin(), pool.end(), o));
  auto [fin, step] = solve({n + 1, questioner_first(n, i), pool, foil, makespan_cost(rows), delta});
  return {fin, step + 1};
}

}  // namespace oracle
}  // namespace testsupport
