#pragma once

// Contrastive explanations. A foil is refuted by replaying the negotiation
// under true costs from the foil onwards, with the original proposal taken
// off the table: the replay settles on an allocation the questioner likes
// no better than the proposal.

#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aita/alloc.hpp"
#include "aita/counterfactual.hpp"
#include "aita/format.hpp"
#include "aita/negotiation.hpp"

namespace aita {

enum class ExplanationStyle { NegotiationTree, Vacuous, Verbose };

inline std::string_view to_string(ExplanationStyle s) {
  switch (s) {
    case ExplanationStyle::NegotiationTree: return "tree";
    case ExplanationStyle::Vacuous: return "vacuous";
    case ExplanationStyle::Verbose: return "verbose";
  }
  return "?";
}

inline ExplanationStyle parse_explanation_style(std::string_view s) {
  if (s == "tree" || s == "negotiationTree") return ExplanationStyle::NegotiationTree;
  if (s == "vacuous") return ExplanationStyle::Vacuous;
  if (s == "verbose") return ExplanationStyle::Verbose;
  throw Error("unknown explanation style '" + std::string(s) + "'");
}

struct Rejection {
  AgentId agent;
  double offer_cost = 0.0;         // discounted cost of this offer to the rejector
  double continuation_cost = 0.0;  // discounted cost of what the replay settles on
  bool operator==(const Rejection&) const = default;
};

struct ExplanationStep {
  int step = 0;
  AgentId proposer;
  Allocation offer;
  double questioner_cost = 0.0;
  std::optional<Rejection> rejection;  // empty on the accepted offer
  bool operator==(const ExplanationStep&) const = default;
};

struct CostRow {
  Allocation allocation;
  std::vector<double> human_costs;
  double performance = 0.0;
  bool operator==(const CostRow&) const = default;
};

struct Explanation {
  ExplanationStyle style = ExplanationStyle::NegotiationTree;
  int num_humans = 0;
  AgentId questioner;
  Allocation original;
  Allocation counterfactual;
  double original_cost = 0.0;  // questioner's cost under the proposal
  std::vector<ExplanationStep> steps;
  std::optional<Allocation> final_allocation;
  std::optional<double> final_cost;  // questioner's cost under final_allocation
  std::string statement;             // vacuous style only
  std::vector<CostRow> cost_table;   // verbose style only
  int length = 0;

  bool operator==(const Explanation&) const = default;
};

// Raised when the replay ends cheaper for the questioner than the proposal.
// That would contradict the existence guarantee, so it is never swallowed.
class ExplanationGuaranteeViolated : public Error {
 public:
  ExplanationGuaranteeViolated(const std::string& what, Explanation partial)
      : Error(what), partial_(std::move(partial)) {}
  const Explanation& partial() const noexcept { return partial_; }

 private:
  Explanation partial_;
};

inline void require_valid_foil(const Scenario& scenario, const Allocation& o, const Allocation& foil,
                               AgentId questioner) {
  FoilVerdict v = validate_counterfactual(scenario, o, foil, questioner);
  if (v.violation == FoilViolation::SameAsProposal ||
      v.violation == FoilViolation::OutsideCapability) {
    throw Error("invalid counterfactual (" + std::string(violation_name(v.violation)) +
                "): " + v.detail);
  }
}

inline Explanation explain(const Scenario& scenario, const Allocation& o, const Allocation& foil,
                           AgentId questioner, double discount,
                           std::size_t cap = kDefaultEnumerationCap) {
  require_valid_foil(scenario, o, foil, questioner);
  const int n = scenario.num_humans();
  auto pool = enumerate_allocations(n, scenario.num_tasks(), cap);
  std::erase(pool, o);

  NegotiationChain chain = build_chain(CostView::true_costs(scenario), std::move(pool),
                                       questioner_first_order(n, questioner), discount, foil, {o});
  Outcome out = solve_spe(chain);

  Explanation e;
  e.style = ExplanationStyle::NegotiationTree;
  e.num_humans = n;
  e.questioner = questioner;
  e.original = o;
  e.counterfactual = foil;
  e.original_cost = agent_cost(scenario, o, questioner);
  for (int s = 0; s <= out.step; ++s) {
    const ChainNode& node = chain.nodes[static_cast<std::size_t>(s)];
    ExplanationStep step{s, node.proposer, node.offer, node.costs[questioner.value], std::nullopt};
    if (s < out.step) {
      const Decision* r = node.first_rejection();
      if (r == nullptr) throw Error("replay node " + std::to_string(s) + " has no rejection");
      step.rejection = Rejection{r->agent, r->offer_cost, r->continuation_cost};
    }
    e.steps.push_back(std::move(step));
  }
  e.final_allocation = out.allocation;
  e.final_cost = chain.nodes[static_cast<std::size_t>(out.step)].costs[questioner.value];
  e.length = static_cast<int>(e.steps.size());

  if (!approx_le(e.original_cost, *e.final_cost)) {
    throw ExplanationGuaranteeViolated(
        "replay from " + to_string(foil) + " settles on " + to_string(out.allocation) +
            ", which costs human " + to_string(questioner) + " " + format_number(*e.final_cost) +
            " < " + format_number(e.original_cost) + " under the proposal " + to_string(o),
        e);
  }
  return e;
}

inline int explanation_length(const Explanation& e) { return static_cast<int>(e.steps.size()); }

inline Explanation baseline_explanation(const Scenario& scenario, const Allocation& o,
                                        const Allocation& foil, AgentId questioner,
                                        ExplanationStyle style,
                                        std::size_t cap = kDefaultEnumerationCap) {
  require_valid_foil(scenario, o, foil, questioner);
  Explanation e;
  e.style = style;
  e.num_humans = scenario.num_humans();
  e.questioner = questioner;
  e.original = o;
  e.counterfactual = foil;
  e.original_cost = agent_cost(scenario, o, questioner);
  switch (style) {
    case ExplanationStyle::NegotiationTree:
      return explain(scenario, o, foil, questioner, scenario.discount(), cap);
    case ExplanationStyle::Vacuous:
      e.statement = "The allocation " + to_string(foil) +
                    " would not be accepted by the other team members and does not ensure a good "
                    "overall performance, so the proposed allocation " +
                    to_string(o) + " stands.";
      break;
    case ExplanationStyle::Verbose:
      for (Allocation& a : enumerate_allocations(scenario.num_humans(), scenario.num_tasks(), cap)) {
        CostRow row;
        for (int i = 0; i < scenario.num_humans(); ++i)
          row.human_costs.push_back(agent_cost(scenario, a, AgentId(i)));
        row.performance = performance_cost(scenario, a);
        row.allocation = std::move(a);
        e.cost_table.push_back(std::move(row));
      }
      break;
  }
  return e;
}

enum class RenderFormat { Text, Json, Dot };

inline RenderFormat parse_render_format(std::string_view s) {
  if (s == "text") return RenderFormat::Text;
  if (s == "json") return RenderFormat::Json;
  if (s == "dot") return RenderFormat::Dot;
  throw Error("unknown output format '" + std::string(s) + "'");
}

inline std::string render_text(const Explanation& e) {
  const int n = e.num_humans;
  std::ostringstream out;
  const std::string who = agent_label(e.questioner, n);
  out << who << " questions " << to_string(e.original) << " with " << to_string(e.counterfactual)
      << " (cost " << format_number(e.original_cost) << " under the proposal)\n";
  switch (e.style) {
    case ExplanationStyle::Vacuous:
      out << e.statement << "\n";
      break;
    case ExplanationStyle::Verbose: {
      out << "allocation";
      for (int i = 0; i < n; ++i) out << "\thuman " << i;
      out << "\tAITA\n";
      for (const CostRow& row : e.cost_table) {
        out << to_string(row.allocation);
        for (double c : row.human_costs) out << '\t' << format_number(c);
        out << '\t' << format_number(row.performance) << "\n";
      }
      break;
    }
    case ExplanationStyle::NegotiationTree: {
      for (const ExplanationStep& s : e.steps) {
        out << s.step + 1 << ". " << agent_label(s.proposer, n) << " offers "
            << to_string(s.offer) << " (" << who << " pays " << format_number(s.questioner_cost)
            << ")\n";
        if (s.rejection) {
          out << "   " << agent_label(s.rejection->agent, n) << " rejects: "
              << format_number(s.rejection->offer_cost) << " now versus "
              << format_number(s.rejection->continuation_cost) << " by holding out\n";
        } else {
          out << "   everyone accepts\n";
        }
      }
      if (e.final_allocation) {
        out << "Outcome " << to_string(*e.final_allocation) << " costs " << who << " "
            << format_number(*e.final_cost) << ", no less than "
            << format_number(e.original_cost) << " under " << to_string(e.original) << "\n";
      }
      break;
    }
  }
  return out.str();
}

inline std::string render_dot(const Explanation& e) {
  const int n = e.num_humans;
  std::ostringstream out;
  out << "digraph explanation {\n  rankdir=TB;\n  node [shape=box];\n";
  switch (e.style) {
    case ExplanationStyle::NegotiationTree:
      for (const ExplanationStep& s : e.steps) {
        out << "  n" << s.step << " [label=\"" << agent_label(s.proposer, n) << " offers "
            << to_string(s.offer) << "\\n" << agent_label(e.questioner, n) << " pays "
            << format_number(s.questioner_cost) << "\"";
        if (!s.rejection) out << ", peripheries=2";
        out << "];\n";
      }
      for (const ExplanationStep& s : e.steps) {
        if (!s.rejection) continue;
        out << "  n" << s.step << " -> n" << s.step + 1 << " [label=\""
            << agent_label(s.rejection->agent, n) << " rejects: "
            << format_number(s.rejection->offer_cost) << " > "
            << format_number(s.rejection->continuation_cost) << "\"];\n";
      }
      break;
    case ExplanationStyle::Vacuous:
      out << "  statement [label=\"" << e.statement << "\"];\n";
      break;
    case ExplanationStyle::Verbose:
      for (std::size_t r = 0; r < e.cost_table.size(); ++r) {
        const CostRow& row = e.cost_table[r];
        out << "  r" << r << " [label=\"" << to_string(row.allocation);
        for (double c : row.human_costs) out << " " << format_number(c);
        out << " | " << format_number(row.performance) << "\"];\n";
      }
      break;
  }
  out << "}\n";
  return out.str();
}

}  // namespace aita
