#pragma once

// A boundedly rational human questioning a proposed allocation. The human
// knows their own costs, holds beliefs about everyone else, and can only
// reason about allocations one reassignment away from the proposal.

#include <algorithm>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "aita/alloc.hpp"
#include "aita/negotiation.hpp"

namespace aita {

struct BeliefModel {
  AgentId owner;
  std::vector<std::vector<double>> believed_costs;  // one row per human
  PerformanceModel believed_performance;            // derived kinds recompute from rows
  std::set<int> exact;                              // agents known exactly, owner included

  int num_humans() const noexcept { return static_cast<int>(believed_costs.size()); }

  // Belief that matches the truth everywhere.
  static BeliefModel exact_copy(const Scenario& scenario, AgentId owner) {
    BeliefModel b{owner, scenario.costs(), scenario.performance(), {}};
    for (int a = 0; a <= scenario.num_humans(); ++a) b.exact.insert(a);
    return b;
  }

  // Rejects beliefs that contradict the invariants: the owner's own row must
  // be the true one, as must every row marked exact.
  void check_against(const Scenario& scenario) const {
    if (!scenario.is_human(owner)) {
      throw Error("belief owner must be a human, got agent " + to_string(owner));
    }
    if (num_humans() != scenario.num_humans()) {
      throw Error("belief has " + std::to_string(num_humans()) + " rows, scenario has " +
                  std::to_string(scenario.num_humans()) + " humans");
    }
    for (int i = 0; i < num_humans(); ++i) {
      const auto& row = believed_costs[i];
      if (row.size() != scenario.num_tasks()) {
        throw Error("belief row " + std::to_string(i) + " has the wrong number of tasks");
      }
      for (double c : row)
        if (std::isnan(c) || c < 0) throw Error("belief row " + std::to_string(i) + " is negative");
      bool must_match = i == owner.value || exact.contains(i);
      if (must_match && row != scenario.costs()[i]) {
        throw Error("belief row " + std::to_string(i) + " is marked exact but differs from the truth");
      }
    }
    if (believed_performance.kind != scenario.performance().kind) {
      throw Error("belief uses a different performance model than the scenario");
    }
    if (believed_performance.kind == PerformanceKind::Table) {
      if (believed_performance.values.size() != scenario.performance().values.size()) {
        throw Error("believed performance table has the wrong size");
      }
      if (exact.contains(scenario.num_humans()) &&
          believed_performance.values != scenario.performance().values) {
        throw Error("performance is marked exact but the believed table differs from the truth");
      }
    }
  }
};

inline double believed_cost(const BeliefModel& belief, const Allocation& o, AgentId j) {
  const int n = belief.num_humans();
  if (j.value < 0 || j.value > n) throw Error("unknown agent " + to_string(j));
  if (o.size() != belief.believed_costs.front().size()) {
    throw Error("allocation " + to_string(o) + " has the wrong number of tasks");
  }
  if (j.is_allocator(n)) return evaluate_performance(belief.believed_performance, belief.believed_costs, o, n);
  return row_cost(belief.believed_costs[j.value], o, j.value);
}

inline CostView belief_view(const BeliefModel& belief, std::size_t num_tasks) {
  auto shared = std::make_shared<const BeliefModel>(belief);
  return CostView(
      belief.num_humans(), num_tasks,
      [shared](const Allocation& o, AgentId j) { return believed_cost(*shared, o, j); },
      Provenance::Beliefs, belief.owner);
}

struct Counterfactual {
  Allocation foil;
  NegotiationChain human_chain;
};

// The proposal plus everything one reassignment away from it.
inline std::vector<Allocation> capability_set(const Allocation& o, int num_humans) {
  auto pool = hamming_neighbors(o, num_humans);
  pool.push_back(o);
  std::sort(pool.begin(), pool.end());
  return pool;
}

// Solves the owner's imagined negotiation over the capability set under
// their beliefs, with the owner proposing first. Returns the equilibrium
// allocation when it differs from `o` and truly costs the owner less.
inline std::optional<Counterfactual> optimal_counterfactual(const Scenario& scenario,
                                                            const BeliefModel& belief,
                                                            const Allocation& o, double discount) {
  if (!scenario.is_human(belief.owner)) {
    throw Error("counterfactuals are raised by humans, not agent " + to_string(belief.owner));
  }
  scenario.check_allocation(o);
  const int n = scenario.num_humans();
  NegotiationChain chain = build_chain(belief_view(belief, scenario.num_tasks()),
                                       capability_set(o, n),
                                       questioner_first_order(n, belief.owner), discount);
  Outcome out = solve_spe(chain);
  if (out.allocation == o) return std::nullopt;
  if (!definitely_less(agent_cost(scenario, out.allocation, belief.owner),
                       agent_cost(scenario, o, belief.owner))) {
    return std::nullopt;
  }
  return Counterfactual{out.allocation, std::move(chain)};
}

enum class FoilViolation {
  None,
  SameAsProposal,    // property 1: the foil must differ from the proposal
  OutsideCapability, // property 2: the foil must be one reassignment away
  NotCheaper,        // the foil must truly cost the questioner less
  NotEquilibrium,    // the foil must be the equilibrium of the questioner's imagined negotiation
};

inline std::string_view violation_name(FoilViolation v) {
  switch (v) {
    case FoilViolation::None: return "none";
    case FoilViolation::SameAsProposal: return "property 1";
    case FoilViolation::OutsideCapability: return "property 2";
    case FoilViolation::NotCheaper: return "lower-cost";
    case FoilViolation::NotEquilibrium: return "equilibrium";
  }
  return "?";
}

struct FoilVerdict {
  FoilViolation violation = FoilViolation::None;
  std::size_t distance = 0;
  double proposal_cost = 0.0;
  double foil_cost = 0.0;
  std::string detail;

  bool ok() const noexcept { return violation == FoilViolation::None; }
};

inline FoilVerdict validate_counterfactual(const Scenario& scenario, const Allocation& o,
                                           const Allocation& foil, AgentId questioner,
                                           const BeliefModel* belief = nullptr) {
  scenario.check_allocation(o);
  scenario.check_allocation(foil);
  if (!scenario.is_human(questioner)) {
    throw Error("counterfactuals are raised by humans, not agent " + to_string(questioner));
  }
  FoilVerdict v;
  v.distance = hamming_distance(o, foil);
  v.proposal_cost = agent_cost(scenario, o, questioner);
  v.foil_cost = agent_cost(scenario, foil, questioner);
  if (v.distance == 0) {
    v.violation = FoilViolation::SameAsProposal;
    v.detail = "the counterfactual equals the proposed allocation " + to_string(o);
  } else if (v.distance != 1) {
    v.violation = FoilViolation::OutsideCapability;
    v.detail = "the counterfactual is " + std::to_string(v.distance) +
               " reassignments away from " + to_string(o) + "; only one is allowed";
  } else if (!definitely_less(v.foil_cost, v.proposal_cost)) {
    v.violation = FoilViolation::NotCheaper;
    v.detail = "the counterfactual costs " + format_number(v.foil_cost) +
               ", not less than the proposal's " + format_number(v.proposal_cost);
  } else if (belief != nullptr) {
    if (belief->owner != questioner) throw Error("belief belongs to a different human");
    auto best = optimal_counterfactual(scenario, *belief, o, scenario.discount());
    if (!best || best->foil != foil) {
      v.violation = FoilViolation::NotEquilibrium;
      v.detail = "the questioner's own negotiation settles on " +
                 (best ? to_string(best->foil) : to_string(o)) + ", not " + to_string(foil);
    }
  }
  return v;
}

}  // namespace aita
