#pragma once

// Core task-allocation types: scenarios, allocations encoded as base-n
// strings, per-agent costs and enumeration helpers.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace aita {

// Base class for every error raised by the engine. The CLI maps these to
// exit status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class CapExceeded : public Error {
 public:
  explicit CapExceeded(double count, double cap)
      : Error("allocation space of size " + format_count(count) +
              " exceeds the enumeration cap of " + format_count(cap)),
        count_(count) {}
  double count() const noexcept { return count_; }

 private:
  static std::string format_count(double v) {
    if (v < 1e15) return std::to_string(static_cast<long long>(v));
    return std::to_string(v);
  }
  double count_;
};

inline constexpr double kIncapable = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;
inline constexpr double kDefaultDiscount = 0.9;
inline constexpr int kMaxAgents = 36;

// Agent index. Humans are 0..n-1; the allocator itself is n.
struct AgentId {
  int value = 0;

  constexpr AgentId() = default;
  constexpr explicit AgentId(int v) : value(v) {}
  constexpr auto operator<=>(const AgentId&) const = default;

  constexpr bool is_allocator(int num_humans) const { return value == num_humans; }
};

inline std::string to_string(AgentId id) { return std::to_string(id.value); }

// One task per slot; slot j holds the human performing task j.
class Allocation {
 public:
  Allocation() = default;
  explicit Allocation(std::vector<int> assignment) : slots_(std::move(assignment)) {}

  std::size_t size() const noexcept { return slots_.size(); }
  int operator[](std::size_t task) const { return slots_[task]; }
  std::span<const int> assignment() const noexcept { return slots_; }

  Allocation with(std::size_t task, int agent) const {
    Allocation copy = *this;
    copy.slots_[task] = agent;
    return copy;
  }

  // Lexicographic on the assignment, which matches the order on strings.
  auto operator<=>(const Allocation&) const = default;
  bool operator==(const Allocation&) const = default;

 private:
  std::vector<int> slots_;
};

inline char digit_symbol(int d) {
  return d < 10 ? static_cast<char>('0' + d) : static_cast<char>('a' + d - 10);
}

inline int symbol_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'z') return c - 'a' + 10;
  return -1;
}

inline std::string to_string(const Allocation& o) {
  std::string out;
  out.reserve(o.size());
  for (int agent : o.assignment()) out.push_back(digit_symbol(agent));
  return out;
}

inline Allocation parse_allocation(std::string_view text, int num_humans, std::size_t num_tasks) {
  if (text.size() != num_tasks) {
    throw ParseError("allocation '" + std::string(text) + "' has length " +
                         std::to_string(text.size()) + ", expected " +
                         std::to_string(num_tasks),
                     std::min(text.size(), num_tasks));
  }
  std::vector<int> slots(text.size());
  for (std::size_t j = 0; j < text.size(); ++j) {
    int d = symbol_digit(text[j]);
    if (d < 0 || d >= num_humans) {
      throw ParseError("allocation '" + std::string(text) + "' has digit '" +
                           std::string(1, text[j]) + "' not below " + std::to_string(num_humans),
                       j);
    }
    slots[j] = d;
  }
  return Allocation(std::move(slots));
}

inline std::size_t hamming_distance(const Allocation& a, const Allocation& b) {
  std::size_t d = 0;
  for (std::size_t j = 0; j < a.size(); ++j) d += a[j] != b[j];
  return d;
}

enum class PerformanceKind { Table, Makespan, TotalTime };

inline std::string_view to_string(PerformanceKind k) {
  switch (k) {
    case PerformanceKind::Table: return "table";
    case PerformanceKind::Makespan: return "makespan";
    case PerformanceKind::TotalTime: return "total";
  }
  return "?";
}

// Team performance cost, i.e. the allocator's own cost function. Table
// values are indexed by the allocation's rank in lexicographic order.
struct PerformanceModel {
  PerformanceKind kind = PerformanceKind::Makespan;
  std::vector<double> values;
};

// Rank of an allocation among all n^m allocations in lexicographic order.
inline std::size_t allocation_index(const Allocation& o, int num_humans) {
  std::size_t idx = 0;
  for (int agent : o.assignment()) idx = idx * static_cast<std::size_t>(num_humans) + agent;
  return idx;
}

inline double allocation_count(int num_humans, std::size_t num_tasks) {
  return std::pow(static_cast<double>(num_humans), static_cast<double>(num_tasks));
}

class Scenario {
 public:
  Scenario(int num_humans, std::vector<std::string> tasks, std::vector<std::vector<double>> costs,
           PerformanceModel performance = {}, double discount = kDefaultDiscount)
      : num_humans_(num_humans),
        tasks_(std::move(tasks)),
        costs_(std::move(costs)),
        performance_(std::move(performance)),
        discount_(discount) {
    validate();
  }

  int num_humans() const noexcept { return num_humans_; }
  std::size_t num_tasks() const noexcept { return tasks_.size(); }
  AgentId allocator() const noexcept { return AgentId(num_humans_); }
  const std::vector<std::string>& tasks() const noexcept { return tasks_; }
  const std::vector<std::vector<double>>& costs() const noexcept { return costs_; }
  std::span<const double> cost_row(AgentId human) const { return costs_.at(human.value); }
  const PerformanceModel& performance() const noexcept { return performance_; }
  double discount() const noexcept { return discount_; }

  bool is_human(AgentId id) const { return id.value >= 0 && id.value < num_humans_; }
  bool is_agent(AgentId id) const { return id.value >= 0 && id.value <= num_humans_; }

  void check_allocation(const Allocation& o) const {
    if (o.size() != num_tasks()) {
      throw Error("allocation " + to_string(o) + " does not cover " +
                  std::to_string(num_tasks()) + " tasks");
    }
    for (std::size_t j = 0; j < o.size(); ++j) {
      if (o[j] < 0 || o[j] >= num_humans_) {
        throw Error("allocation " + to_string(o) + " names unknown human at position " +
                    std::to_string(j));
      }
    }
  }

  // Same scenario with every cost (humans and performance) multiplied by k.
  Scenario scaled(double k) const {
    auto costs = costs_;
    for (auto& row : costs)
      for (double& c : row) c *= k;
    PerformanceModel perf = performance_;
    for (double& v : perf.values) v *= k;
    return Scenario(num_humans_, tasks_, std::move(costs), std::move(perf), discount_);
  }

 private:
  void validate() const {
    if (num_humans_ < 1) throw Error("scenario needs at least one human");
    if (num_humans_ > kMaxAgents) {
      throw Error("at most " + std::to_string(kMaxAgents) + " humans are supported");
    }
    if (tasks_.empty()) throw Error("scenario needs at least one task");
    if (costs_.size() != static_cast<std::size_t>(num_humans_)) {
      throw Error("costs has " + std::to_string(costs_.size()) + " rows, expected " +
                  std::to_string(num_humans_));
    }
    for (std::size_t i = 0; i < costs_.size(); ++i) {
      if (costs_[i].size() != tasks_.size()) {
        throw Error("costs row " + std::to_string(i) + " has " +
                    std::to_string(costs_[i].size()) + " entries, expected " +
                    std::to_string(tasks_.size()));
      }
      for (double c : costs_[i]) {
        if (std::isnan(c) || c < 0) {
          throw Error("costs row " + std::to_string(i) + " holds a negative or NaN cost");
        }
      }
    }
    if (performance_.kind == PerformanceKind::Table) {
      double expected = allocation_count(num_humans_, tasks_.size());
      if (static_cast<double>(performance_.values.size()) != expected) {
        throw Error("performance table has " + std::to_string(performance_.values.size()) +
                    " entries, expected " + std::to_string(static_cast<long long>(expected)));
      }
      for (double v : performance_.values) {
        if (std::isnan(v) || v < 0) throw Error("performance table holds a negative or NaN cost");
      }
    }
    if (!(discount_ > 0.0 && discount_ <= 1.0)) {
      throw Error("discount must lie in (0, 1], got " + std::to_string(discount_));
    }
  }

  int num_humans_;
  std::vector<std::string> tasks_;
  std::vector<std::vector<double>> costs_;
  PerformanceModel performance_;
  double discount_;
};

// Sum of a cost row over the tasks the allocation gives to `human`.
inline double row_cost(std::span<const double> row, const Allocation& o, int human) {
  double total = 0.0;
  for (std::size_t j = 0; j < o.size(); ++j)
    if (o[j] == human) total += row[j];
  return total;
}

// Performance cost for the given per-human cost rows. Shared between the
// true scenario and believed cost views.
inline double evaluate_performance(const PerformanceModel& perf,
                                   const std::vector<std::vector<double>>& rows,
                                   const Allocation& o, int num_humans) {
  switch (perf.kind) {
    case PerformanceKind::Table: {
      std::size_t idx = allocation_index(o, num_humans);
      if (idx >= perf.values.size()) {
        throw Error("performance table has no entry for " + to_string(o));
      }
      return perf.values[idx];
    }
    case PerformanceKind::Makespan: {
      double worst = 0.0;
      for (int i = 0; i < num_humans; ++i) worst = std::max(worst, row_cost(rows[i], o, i));
      return worst;
    }
    case PerformanceKind::TotalTime: {
      double total = 0.0;
      for (int i = 0; i < num_humans; ++i) total += row_cost(rows[i], o, i);
      return total;
    }
  }
  return 0.0;
}

inline double performance_cost(const Scenario& s, const Allocation& o) {
  s.check_allocation(o);
  return evaluate_performance(s.performance(), s.costs(), o, s.num_humans());
}

inline double agent_cost(const Scenario& s, const Allocation& o, AgentId agent) {
  if (!s.is_agent(agent)) {
    throw Error("agent index " + to_string(agent) + " exceeds allocator index " +
                std::to_string(s.num_humans()));
  }
  if (agent.is_allocator(s.num_humans())) return performance_cost(s, o);
  s.check_allocation(o);
  return row_cost(s.cost_row(agent), o, agent.value);
}

// Every allocation at Hamming distance one from `o`, in lexicographic order.
inline std::vector<Allocation> hamming_neighbors(const Allocation& o, int num_humans) {
  std::vector<Allocation> out;
  out.reserve(o.size() * static_cast<std::size_t>(num_humans - 1));
  for (std::size_t j = 0; j < o.size(); ++j)
    for (int a = 0; a < num_humans; ++a)
      if (a != o[j]) out.push_back(o.with(j, a));
  std::sort(out.begin(), out.end());
  return out;
}

inline void check_enumeration_cap(int num_humans, std::size_t num_tasks,
                                  std::size_t cap = kDefaultEnumerationCap) {
  double count = allocation_count(num_humans, num_tasks);
  if (count > static_cast<double>(cap)) throw CapExceeded(count, static_cast<double>(cap));
}

inline std::vector<Allocation> enumerate_allocations(int num_humans, std::size_t num_tasks,
                                                     std::size_t cap = kDefaultEnumerationCap) {
  check_enumeration_cap(num_humans, num_tasks, cap);
  auto total = static_cast<std::size_t>(allocation_count(num_humans, num_tasks));
  std::vector<Allocation> out;
  out.reserve(total);
  std::vector<int> slots(num_tasks, 0);
  for (std::size_t k = 0; k < total; ++k) {
    out.emplace_back(slots);
    // odometer increment, last slot fastest
    for (std::size_t j = num_tasks; j-- > 0;) {
      if (++slots[j] < num_humans) break;
      slots[j] = 0;
    }
  }
  return out;
}

// Cost incurred `step` rounds into the negotiation: c / delta^step.
inline double discounted_cost(double cost, int step, double discount) {
  if (!(discount > 0.0 && discount <= 1.0)) {
    throw Error("discount must lie in (0, 1], got " + std::to_string(discount));
  }
  if (step == 0 || discount == 1.0) return cost;
  return cost / std::pow(discount, step);
}

// Costs that agree up to floating-point noise count as equal. Keeps
// decisions stable when every cost is rescaled.
inline constexpr double kRelativeTolerance = 1e-9;

inline bool approx_equal(double a, double b) {
  if (a == b) return true;
  if (std::isinf(a) || std::isinf(b)) return false;
  return std::abs(a - b) <= kRelativeTolerance * std::max(std::abs(a), std::abs(b));
}

inline bool approx_le(double a, double b) { return a <= b || approx_equal(a, b); }
inline bool definitely_less(double a, double b) { return !approx_le(b, a); }

}  // namespace aita
