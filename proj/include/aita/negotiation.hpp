#pragma once

// Sequential bargaining over allocations. Agents take turns proposing their
// cheapest not-yet-offered allocation; every other agent accepts or rejects.
// Because a rejection always hands the turn to the next proposer, the game
// tree is a single chain and backward induction runs in one reverse pass.

#include <algorithm>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "aita/alloc.hpp"
#include "aita/format.hpp"

namespace aita {

enum class Provenance { TrueCosts, Beliefs };

// Cost lookup for every (allocation, agent) pair, either the true costs or
// one human's believed costs.
class CostView {
 public:
  using Evaluator = std::function<double(const Allocation&, AgentId)>;

  CostView(int num_humans, std::size_t num_tasks, Evaluator evaluator, Provenance provenance,
           std::optional<AgentId> believer = std::nullopt)
      : num_humans_(num_humans),
        num_tasks_(num_tasks),
        evaluator_(std::move(evaluator)),
        provenance_(provenance),
        believer_(believer) {}

  static CostView true_costs(const Scenario& scenario) {
    auto shared = std::make_shared<const Scenario>(scenario);
    return CostView(
        scenario.num_humans(), scenario.num_tasks(),
        [shared](const Allocation& o, AgentId a) { return agent_cost(*shared, o, a); },
        Provenance::TrueCosts);
  }

  double cost(const Allocation& o, AgentId agent) const { return evaluator_(o, agent); }
  int num_humans() const noexcept { return num_humans_; }
  std::size_t num_tasks() const noexcept { return num_tasks_; }
  int num_agents() const noexcept { return num_humans_ + 1; }
  Provenance provenance() const noexcept { return provenance_; }
  std::optional<AgentId> believer() const noexcept { return believer_; }

 private:
  int num_humans_;
  std::size_t num_tasks_;
  Evaluator evaluator_;
  Provenance provenance_;
  std::optional<AgentId> believer_;
};

// Allocator first, then humans 0..n-1.
inline std::vector<AgentId> allocator_first_order(int num_humans) {
  std::vector<AgentId> order;
  order.emplace_back(num_humans);
  for (int i = 0; i < num_humans; ++i) order.emplace_back(i);
  return order;
}

// The questioning human first, then the remaining humans cyclically, then
// the allocator.
inline std::vector<AgentId> questioner_first_order(int num_humans, AgentId questioner) {
  std::vector<AgentId> order;
  for (int k = 0; k < num_humans; ++k) order.emplace_back((questioner.value + k) % num_humans);
  order.emplace_back(num_humans);
  return order;
}

struct Decision {
  AgentId agent;
  bool accept = true;
  double offer_cost = 0.0;         // discounted, at this node's step
  double continuation_cost = 0.0;  // discounted, at the subgame outcome's step
};

struct Outcome {
  Allocation allocation;
  int step = 0;
  bool operator==(const Outcome&) const = default;
};

struct ChainNode {
  int step = 0;
  AgentId proposer;
  Allocation offer;
  std::vector<double> costs;        // undiscounted cost of `offer`, indexed by agent
  std::vector<Decision> decisions;  // filled by solve_spe, in response order
  std::optional<Outcome> spe;       // filled by solve_spe

  bool accepted() const {
    return std::all_of(decisions.begin(), decisions.end(),
                       [](const Decision& d) { return d.accept; });
  }
  const Decision* first_rejection() const {
    for (const Decision& d : decisions)
      if (!d.accept) return &d;
    return nullptr;
  }
};

struct NegotiationChain {
  CostView view;
  std::vector<AgentId> order;
  double discount = kDefaultDiscount;
  std::vector<Allocation> candidates;
  std::vector<Allocation> excluded;
  std::vector<ChainNode> nodes;
  bool solved = false;

  std::size_t size() const noexcept { return nodes.size(); }
  // The last node is force-accepted: disagreement costs everyone infinitely.
  bool is_terminal(std::size_t step) const { return step + 1 == nodes.size(); }

  // Agents other than the proposer, in the order they answer.
  std::vector<AgentId> responders(AgentId proposer) const {
    auto it = std::find(order.begin(), order.end(), proposer);
    std::size_t pos = static_cast<std::size_t>(it - order.begin());
    std::vector<AgentId> out;
    for (std::size_t k = 1; k < order.size(); ++k) out.push_back(order[(pos + k) % order.size()]);
    return out;
  }

  const ChainNode* find_offer(const Allocation& o) const {
    for (const ChainNode& node : nodes)
      if (node.offer == o) return &node;
    return nullptr;
  }

  Outcome outcome() const {
    if (!solved || nodes.empty()) throw Error("negotiation chain has not been solved");
    return *nodes.front().spe;
  }
};

namespace detail {

inline void check_order(const std::vector<AgentId>& order, int num_agents) {
  if (order.size() != static_cast<std::size_t>(num_agents)) {
    throw Error("proposer order must list all " + std::to_string(num_agents) +
                " agents exactly once");
  }
  std::vector<bool> seen(num_agents, false);
  for (AgentId a : order) {
    if (a.value < 0 || a.value >= num_agents || seen[a.value]) {
      throw Error("proposer order must list all " + std::to_string(num_agents) +
                  " agents exactly once");
    }
    seen[a.value] = true;
  }
}

// Candidate indices ordered by one agent's cost; costs equal up to rounding
// fall back to lexicographic order of the allocation.
inline std::vector<std::size_t> preference_order(const std::vector<double>& cost) {
  std::vector<std::size_t> idx(cost.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return cost[a] < cost[b]; });
  for (std::size_t start = 0; start < idx.size();) {
    std::size_t end = start + 1;
    while (end < idx.size() && approx_equal(cost[idx[start]], cost[idx[end]])) ++end;
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(start),
              idx.begin() + static_cast<std::ptrdiff_t>(end));
    start = end;
  }
  return idx;
}

}  // namespace detail

// Greedy round-robin offers over `candidates`. Node s is proposed by
// order[s mod |order|] and offers that agent's cheapest remaining candidate
// (discounting scales all candidates alike at a fixed step, so it never
// changes the choice). `root_offer`, when given, replaces the first
// proposer's choice. The chain ends once every candidate has been offered.
inline NegotiationChain build_chain(const CostView& view, std::vector<Allocation> candidates,
                                    std::vector<AgentId> order, double discount,
                                    std::optional<Allocation> root_offer = std::nullopt,
                                    std::vector<Allocation> excluded = {}) {
  if (candidates.empty()) throw Error("negotiation needs at least one candidate allocation");
  detail::check_order(order, view.num_agents());
  discounted_cost(0.0, 0, discount);  // validates the discount

  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  const std::size_t count = candidates.size();
  const int agents = view.num_agents();

  // cost[agent][candidate]
  std::vector<std::vector<double>> cost(agents, std::vector<double>(count));
  for (int a = 0; a < agents; ++a)
    for (std::size_t c = 0; c < count; ++c) cost[a][c] = view.cost(candidates[c], AgentId(a));

  std::vector<std::vector<std::size_t>> preference(agents);
  for (int a = 0; a < agents; ++a) preference[a] = detail::preference_order(cost[a]);
  std::vector<std::size_t> cursor(agents, 0);
  std::vector<bool> used(count, false);

  NegotiationChain chain{view, order, discount, candidates, std::move(excluded), {}, false};
  chain.nodes.reserve(count);

  auto emit = [&](std::size_t c, AgentId proposer) {
    used[c] = true;
    ChainNode node;
    node.step = static_cast<int>(chain.nodes.size());
    node.proposer = proposer;
    node.offer = candidates[c];
    node.costs.resize(agents);
    for (int a = 0; a < agents; ++a) node.costs[a] = cost[a][c];
    chain.nodes.push_back(std::move(node));
  };

  if (root_offer) {
    auto it = std::lower_bound(candidates.begin(), candidates.end(), *root_offer);
    if (it == candidates.end() || *it != *root_offer) {
      throw Error("root offer " + to_string(*root_offer) + " is not among the candidates");
    }
    emit(static_cast<std::size_t>(it - candidates.begin()), order.front());
  }
  while (chain.nodes.size() < count) {
    AgentId proposer = order[chain.nodes.size() % order.size()];
    auto& prefs = preference[proposer.value];
    auto& at = cursor[proposer.value];
    while (used[prefs[at]]) ++at;
    emit(prefs[at], proposer);
  }
  return chain;
}

// Backward induction over accept/reject decisions. The terminal node is
// accepted by construction; at any earlier node a responder accepts iff the
// discounted cost of the offer now is no more than the discounted cost of
// the outcome the rest of the chain would settle on.
inline Outcome solve_spe(NegotiationChain& chain) {
  if (chain.nodes.empty()) throw Error("cannot solve an empty negotiation chain");
  const double delta = chain.discount;
  for (std::size_t s = chain.nodes.size(); s-- > 0;) {
    ChainNode& node = chain.nodes[s];
    node.decisions.clear();
    const int step = node.step;
    if (chain.is_terminal(s)) {
      for (AgentId j : chain.responders(node.proposer)) {
        node.decisions.push_back(
            {j, true, discounted_cost(node.costs[j.value], step, delta), kIncapable});
      }
      node.spe = Outcome{node.offer, step};
      continue;
    }
    const Outcome& next = *chain.nodes[s + 1].spe;
    const ChainNode& settled = chain.nodes[static_cast<std::size_t>(next.step)];
    bool all_accept = true;
    for (AgentId j : chain.responders(node.proposer)) {
      double now = discounted_cost(node.costs[j.value], step, delta);
      double later = discounted_cost(settled.costs[j.value], next.step, delta);
      bool accept = approx_le(now, later);
      all_accept = all_accept && accept;
      node.decisions.push_back({j, accept, now, later});
    }
    node.spe = all_accept ? Outcome{node.offer, step} : next;
  }
  chain.solved = true;
  return *chain.nodes.front().spe;
}

struct FairAllocation {
  Allocation allocation;
  int accept_step = 0;
  NegotiationChain chain;
};

// Negotiation-aware allocation: the equilibrium of the full chain over all
// n^m allocations under true costs, with the allocator proposing first.
inline FairAllocation fair_allocation(const Scenario& scenario,
                                      std::size_t cap = kDefaultEnumerationCap) {
  auto all = enumerate_allocations(scenario.num_humans(), scenario.num_tasks(), cap);
  NegotiationChain chain = build_chain(CostView::true_costs(scenario), std::move(all),
                                       allocator_first_order(scenario.num_humans()),
                                       scenario.discount());
  Outcome out = solve_spe(chain);
  return {out.allocation, out.step, std::move(chain)};
}

enum class FairnessMode {
  // Later offers are judged through the recorded equilibrium continuation.
  Witnessed,
  // Every later offer must be strictly worse for every agent.
  Strict,
};

struct FairnessVerdict {
  bool pass = false;
  int property = 0;  // 1 or 2 when failing, 0 when passing
  std::optional<int> node;
  std::optional<AgentId> agent;
  std::string detail;
  // Rejection witnesses for every offer before the accepted one.
  std::vector<std::pair<int, AgentId>> witnesses;
};

// Checks that `o`, offered at step s of `chain`, is fair:
//  1. no agent expects a cheaper result from continuing past s;
//  2. every offer before s was rejected by some non-proposer who pays
//     strictly more for it than for `o` at step s.
// Stored costs are re-derived from the scenario; a mismatch throws.
inline FairnessVerdict verify_fairness(const Scenario& scenario, const Allocation& o,
                                       const NegotiationChain& chain,
                                       FairnessMode mode = FairnessMode::Witnessed) {
  if (!chain.solved) throw Error("negotiation chain has not been solved");
  if (chain.view.num_humans() != scenario.num_humans() ||
      chain.view.num_tasks() != scenario.num_tasks()) {
    throw Error("negotiation chain does not belong to this scenario");
  }
  const int agents = scenario.num_humans() + 1;
  for (const ChainNode& node : chain.nodes) {
    for (int a = 0; a < agents; ++a) {
      if (!approx_equal(node.costs[a], agent_cost(scenario, node.offer, AgentId(a)))) {
        throw Error("negotiation chain costs disagree with the scenario at node " +
                    std::to_string(node.step));
      }
    }
  }

  FairnessVerdict verdict;
  const ChainNode* at = chain.find_offer(o);
  if (at == nullptr) {
    verdict.property = 1;
    verdict.detail = to_string(o) + " is never offered in the negotiation";
    return verdict;
  }
  const int s = at->step;
  const double delta = chain.discount;
  auto disc = [&](const ChainNode& node, AgentId j) {
    return discounted_cost(node.costs[j.value], node.step, delta);
  };

  if (!chain.is_terminal(static_cast<std::size_t>(s))) {
    if (mode == FairnessMode::Witnessed) {
      const Outcome& next = *chain.nodes[static_cast<std::size_t>(s) + 1].spe;
      const ChainNode& settled = chain.nodes[static_cast<std::size_t>(next.step)];
      std::vector<AgentId> everyone = chain.responders(at->proposer);
      everyone.push_back(at->proposer);
      for (AgentId j : everyone) {
        if (!approx_le(disc(*at, j), disc(settled, j))) {
          verdict.property = 1;
          verdict.node = s;
          verdict.agent = j;
          verdict.detail = "agent " + to_string(j) + " pays " + format_number(disc(*at, j)) +
                           " for " + to_string(o) + " at step " + std::to_string(s) +
                           " but only " + format_number(disc(settled, j)) + " for " +
                           to_string(settled.offer) + " at step " + std::to_string(next.step);
          return verdict;
        }
      }
    } else {
      for (std::size_t later = static_cast<std::size_t>(s) + 1; later < chain.size(); ++later) {
        const ChainNode& node = chain.nodes[later];
        for (int a = 0; a < agents; ++a) {
          AgentId j(a);
          if (!definitely_less(disc(*at, j), disc(node, j))) {
            verdict.property = 1;
            verdict.node = node.step;
            verdict.agent = j;
            verdict.detail = "agent " + to_string(j) + " would not pay more for later offer " +
                             to_string(node.offer) + " at step " + std::to_string(node.step);
            return verdict;
          }
        }
      }
    }
  }

  for (int earlier = 0; earlier < s; ++earlier) {
    const ChainNode& node = chain.nodes[static_cast<std::size_t>(earlier)];
    std::optional<AgentId> witness;
    if (const Decision* r = node.first_rejection();
        r != nullptr && definitely_less(disc(*at, r->agent), disc(node, r->agent))) {
      witness = r->agent;
    }
    for (AgentId j : chain.responders(node.proposer)) {
      if (witness) break;
      if (definitely_less(disc(*at, j), disc(node, j))) witness = j;
    }
    if (!witness) {
      verdict.property = 2;
      verdict.node = earlier;
      verdict.detail = "no agent other than the proposer pays more for earlier offer " +
                       to_string(node.offer) + " than for " + to_string(o);
      return verdict;
    }
    verdict.witnesses.emplace_back(earlier, *witness);
  }
  verdict.pass = true;
  return verdict;
}

// Distance of a human's cost at the fair allocation from their individually
// optimal allocation, which costs them nothing.
inline double selfishness_bound(const Scenario& scenario, const Allocation& fair, AgentId human) {
  if (!scenario.is_human(human)) {
    throw Error("selfishness bound is defined for humans only, not agent " + to_string(human));
  }
  return agent_cost(scenario, fair, human);
}

inline std::string agent_label(AgentId a, int num_humans) {
  return a.is_allocator(num_humans) ? std::string("AITA") : "human " + to_string(a);
}

inline std::string chain_to_dot(const NegotiationChain& chain) {
  const int n = chain.view.num_humans();
  std::ostringstream out;
  out << "digraph negotiation {\n  rankdir=TB;\n  node [shape=box];\n";
  for (const ChainNode& node : chain.nodes) {
    out << "  n" << node.step << " [label=\"" << node.step << ": " << agent_label(node.proposer, n)
        << " offers " << to_string(node.offer) << "\"";
    if (node.spe && node.spe->step == node.step) out << ", peripheries=2";
    out << "];\n";
  }
  for (std::size_t s = 0; s + 1 < chain.nodes.size(); ++s) {
    const ChainNode& node = chain.nodes[s];
    out << "  n" << s << " -> n" << s + 1;
    if (const Decision* r = node.first_rejection()) {
      out << " [label=\"" << agent_label(r->agent, n) << " rejects: "
          << format_number(r->offer_cost) << " > " << format_number(r->continuation_cost) << "\"]";
    } else if (chain.solved) {
      out << " [style=dashed]";
    }
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace aita
