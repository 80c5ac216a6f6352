#pragma once

// JSON forms of scenarios, beliefs, chains, explanations and sweep results.
// Costs serialize as plain numbers; an incapable (infinite) cost is the
// string "incapable".

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "aita/alloc.hpp"
#include "aita/counterfactual.hpp"
#include "aita/explanation.hpp"
#include "aita/negotiation.hpp"
#include "aita/noise.hpp"
#include "json.hpp"

namespace aita {

using nlohmann::json;

// Malformed input; the message names the offending source and field.
class FormatError : public Error {
 public:
  using Error::Error;
};

namespace io_detail {

inline const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(where + ": missing field '" + key + "'");
  return *it;
}

template <typename T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": " + e.what());
  }
}

}  // namespace io_detail

inline json cost_to_json(double c) {
  if (std::isinf(c)) return "incapable";
  return c;
}

inline double cost_from_json(const json& j, const std::string& where) {
  if (j.is_string() && j.get<std::string>() == "incapable") return kIncapable;
  if (!j.is_number()) throw FormatError(where + ": expected a number or \"incapable\"");
  return j.get<double>();
}

inline json costs_to_json(const std::vector<double>& v) {
  json out = json::array();
  for (double c : v) out.push_back(cost_to_json(c));
  return out;
}

inline std::vector<double> costs_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": expected an array");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(cost_from_json(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

inline PerformanceKind parse_performance_kind(const std::string& s, const std::string& where) {
  if (s == "makespan") return PerformanceKind::Makespan;
  if (s == "total" || s == "totalTime") return PerformanceKind::TotalTime;
  if (s == "table") return PerformanceKind::Table;
  throw FormatError(where + ": unknown performance model '" + s + "'");
}

inline json performance_to_json(const PerformanceModel& p) {
  json out = {{"model", std::string(to_string(p.kind))}};
  if (p.kind == PerformanceKind::Table) out["values"] = costs_to_json(p.values);
  return out;
}

inline PerformanceModel performance_from_json(const json& j, const std::string& where) {
  PerformanceModel p;
  if (j.is_null()) return p;
  p.kind = parse_performance_kind(
      io_detail::get_as<std::string>(io_detail::field(j, "model", where), where + ".model"), where);
  if (p.kind == PerformanceKind::Table) {
    p.values = costs_from_json(io_detail::field(j, "values", where), where + ".values");
  }
  return p;
}

inline json scenario_to_json(const Scenario& s) {
  json costs = json::array();
  for (const auto& row : s.costs()) costs.push_back(costs_to_json(row));
  return {{"agents", s.num_humans()},
          {"tasks", s.tasks()},
          {"costs", costs},
          {"performance", performance_to_json(s.performance())},
          {"discount", s.discount()}};
}

inline Scenario scenario_from_json(const json& j, const std::string& where = "scenario") {
  using io_detail::field;
  using io_detail::get_as;
  int agents = get_as<int>(field(j, "agents", where), where + ".agents");
  auto tasks = get_as<std::vector<std::string>>(field(j, "tasks", where), where + ".tasks");
  const json& rows = field(j, "costs", where);
  if (!rows.is_array()) throw FormatError(where + ".costs: expected an array of rows");
  std::vector<std::vector<double>> costs;
  for (std::size_t i = 0; i < rows.size(); ++i)
    costs.push_back(costs_from_json(rows[i], where + ".costs[" + std::to_string(i) + "]"));
  PerformanceModel perf;
  if (auto it = j.find("performance"); it != j.end()) {
    perf = performance_from_json(*it, where + ".performance");
  }
  double discount = kDefaultDiscount;
  if (auto it = j.find("discount"); it != j.end()) discount = get_as<double>(*it, where + ".discount");
  try {
    return Scenario(agents, std::move(tasks), std::move(costs), std::move(perf), discount);
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(where + ": " + e.what());
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": file not found or unreadable");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_json_file(path), path.string());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

inline json belief_to_json(const BeliefModel& b) {
  json rows = json::array();
  for (const auto& row : b.believed_costs) rows.push_back(costs_to_json(row));
  return {{"owner", b.owner.value},
          {"believedCosts", rows},
          {"believedPerformance", performance_to_json(b.believed_performance)},
          {"exact", std::vector<int>(b.exact.begin(), b.exact.end())}};
}

inline BeliefModel belief_from_json(const json& j, const std::string& where = "belief") {
  using io_detail::field;
  using io_detail::get_as;
  BeliefModel b;
  b.owner = AgentId(get_as<int>(field(j, "owner", where), where + ".owner"));
  const json& rows = field(j, "believedCosts", where);
  if (!rows.is_array() || rows.empty()) {
    throw FormatError(where + ".believedCosts: expected a non-empty array of rows");
  }
  for (std::size_t i = 0; i < rows.size(); ++i)
    b.believed_costs.push_back(costs_from_json(rows[i], where + ".believedCosts[" + std::to_string(i) + "]"));
  if (auto it = j.find("believedPerformance"); it != j.end()) {
    b.believed_performance = performance_from_json(*it, where + ".believedPerformance");
  }
  if (auto it = j.find("exact"); it != j.end()) {
    auto ids = get_as<std::vector<int>>(*it, where + ".exact");
    b.exact.insert(ids.begin(), ids.end());
  }
  b.exact.insert(b.owner.value);
  return b;
}

inline json chain_to_json(const NegotiationChain& chain) {
  json nodes = json::array();
  for (const ChainNode& node : chain.nodes) {
    json decisions = json::array();
    for (const Decision& d : node.decisions) {
      decisions.push_back({{"agent", d.agent.value},
                           {"accept", d.accept},
                           {"offerCost", cost_to_json(d.offer_cost)},
                           {"continuationCost", cost_to_json(d.continuation_cost)}});
    }
    json n = {{"step", node.step},
              {"proposer", node.proposer.value},
              {"offer", to_string(node.offer)},
              {"costs", costs_to_json(node.costs)},
              {"decisions", decisions}};
    if (node.spe) n["spe"] = {{"allocation", to_string(node.spe->allocation)}, {"step", node.spe->step}};
    nodes.push_back(std::move(n));
  }
  json order = json::array();
  for (AgentId a : chain.order) order.push_back(a.value);
  json excluded = json::array();
  for (const Allocation& a : chain.excluded) excluded.push_back(to_string(a));
  json out = {{"provenance", chain.view.provenance() == Provenance::TrueCosts ? "true-costs" : "beliefs"},
              {"allocator", chain.view.num_humans()},
              {"order", order},
              {"discount", chain.discount},
              {"candidates", chain.candidates.size()},
              {"excluded", excluded},
              {"nodes", nodes}};
  if (chain.view.believer()) out["believer"] = chain.view.believer()->value;
  if (chain.solved && !chain.nodes.empty()) {
    Outcome o = chain.outcome();
    out["outcome"] = {{"allocation", to_string(o.allocation)}, {"step", o.step}};
  }
  return out;
}

inline json explanation_to_json(const Explanation& e) {
  json steps = json::array();
  for (const ExplanationStep& s : e.steps) {
    json step = {{"step", s.step},
                 {"proposer", s.proposer.value},
                 {"offer", to_string(s.offer)},
                 {"questionerCost", cost_to_json(s.questioner_cost)}};
    if (s.rejection) {
      step["rejection"] = {{"agent", s.rejection->agent.value},
                           {"offerCost", cost_to_json(s.rejection->offer_cost)},
                           {"continuationCost", cost_to_json(s.rejection->continuation_cost)}};
    } else {
      step["rejection"] = nullptr;
    }
    steps.push_back(std::move(step));
  }
  json table = json::array();
  for (const CostRow& r : e.cost_table) {
    table.push_back({{"allocation", to_string(r.allocation)},
                     {"humanCosts", costs_to_json(r.human_costs)},
                     {"performance", cost_to_json(r.performance)}});
  }
  json out = {{"style", std::string(to_string(e.style))},
              {"humans", e.num_humans},
              {"questioner", e.questioner.value},
              {"original", to_string(e.original)},
              {"counterfactual", to_string(e.counterfactual)},
              {"originalCost", cost_to_json(e.original_cost)},
              {"steps", steps},
              {"length", e.length}};
  out["finalAllocation"] = e.final_allocation ? json(to_string(*e.final_allocation)) : json(nullptr);
  out["finalCostToQuestioner"] = e.final_cost ? cost_to_json(*e.final_cost) : json(nullptr);
  if (e.style == ExplanationStyle::Vacuous) out["statement"] = e.statement;
  if (e.style == ExplanationStyle::Verbose) out["costTable"] = table;
  return out;
}

inline Explanation explanation_from_json(const json& j, const std::string& where = "explanation") {
  using io_detail::field;
  using io_detail::get_as;
  Explanation e;
  e.style = parse_explanation_style(get_as<std::string>(field(j, "style", where), where + ".style"));
  e.num_humans = get_as<int>(field(j, "humans", where), where + ".humans");
  const std::size_t m = get_as<std::string>(field(j, "original", where), where).size();
  auto alloc = [&](const json& v, const std::string& at) {
    return parse_allocation(get_as<std::string>(v, at), e.num_humans, m);
  };
  e.questioner = AgentId(get_as<int>(field(j, "questioner", where), where + ".questioner"));
  e.original = alloc(field(j, "original", where), where + ".original");
  e.counterfactual = alloc(field(j, "counterfactual", where), where + ".counterfactual");
  e.original_cost = cost_from_json(field(j, "originalCost", where), where + ".originalCost");
  e.length = get_as<int>(field(j, "length", where), where + ".length");
  const json& steps = field(j, "steps", where);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const std::string at = where + ".steps[" + std::to_string(k) + "]";
    const json& s = steps[k];
    ExplanationStep step;
    step.step = get_as<int>(field(s, "step", at), at + ".step");
    step.proposer = AgentId(get_as<int>(field(s, "proposer", at), at + ".proposer"));
    step.offer = alloc(field(s, "offer", at), at + ".offer");
    step.questioner_cost = cost_from_json(field(s, "questionerCost", at), at + ".questionerCost");
    if (const json& r = field(s, "rejection", at); !r.is_null()) {
      step.rejection = Rejection{AgentId(get_as<int>(field(r, "agent", at), at + ".rejection.agent")),
                                 cost_from_json(field(r, "offerCost", at), at + ".rejection"),
                                 cost_from_json(field(r, "continuationCost", at), at + ".rejection")};
    }
    e.steps.push_back(std::move(step));
  }
  if (const json& f = field(j, "finalAllocation", where); !f.is_null()) {
    e.final_allocation = alloc(f, where + ".finalAllocation");
  }
  if (const json& f = field(j, "finalCostToQuestioner", where); !f.is_null()) {
    e.final_cost = cost_from_json(f, where + ".finalCostToQuestioner");
  }
  if (auto it = j.find("statement"); it != j.end()) e.statement = get_as<std::string>(*it, where + ".statement");
  if (auto it = j.find("costTable"); it != j.end()) {
    for (std::size_t k = 0; k < it->size(); ++k) {
      const std::string at = where + ".costTable[" + std::to_string(k) + "]";
      const json& r = (*it)[k];
      e.cost_table.push_back({alloc(field(r, "allocation", at), at),
                              costs_from_json(field(r, "humanCosts", at), at + ".humanCosts"),
                              cost_from_json(field(r, "performance", at), at + ".performance")});
    }
  }
  return e;
}

inline std::string render_explanation(const Explanation& e, RenderFormat format) {
  switch (format) {
    case RenderFormat::Text: return render_text(e);
    case RenderFormat::Json: return explanation_to_json(e).dump(2) + "\n";
    case RenderFormat::Dot: return render_dot(e);
  }
  throw Error("unknown output format");
}

inline json sweep_to_json(const SweepResult& r) {
  json rows = json::array();
  for (const SweepRow& row : r.rows) {
    json x = {{"epsilon", row.epsilon}, {"mode", std::string(to_string(row.mode))},
              {"trial", row.trial},     {"agent", row.agent},
              {"length", row.length},   {"guaranteeHeld", row.guarantee_held}};
    if (row.subset) x["subset"] = *row.subset;
    if (r.normalizer) x["relativeLength"] = row.length / *r.normalizer;
    rows.push_back(std::move(x));
  }
  json aggs = json::array();
  for (const SweepAggregate& a : r.aggregates) {
    json x = {{"epsilon", a.epsilon}, {"count", a.count}, {"mean", a.mean}, {"stddev", a.stddev}};
    if (a.subset) x["subset"] = *a.subset;
    if (a.relative_mean) x["relativeMean"] = *a.relative_mean;
    if (a.relative_stddev) x["relativeStddev"] = *a.relative_stddev;
    aggs.push_back(std::move(x));
  }
  json out = {{"kind", r.kind == SweepKind::Noise ? "noise" : "subset"},
              {"mode", std::string(to_string(r.mode))},
              {"rows", rows},
              {"aggregates", aggs},
              {"guaranteeViolations", r.guarantee_violations()}};
  out["normalizer"] = r.normalizer ? json(*r.normalizer) : json(nullptr);
  return out;
}

// Noise sweep settings. `scenario` is resolved relative to the config file.
struct NoiseExperiment {
  std::optional<Scenario> scenario;
  NoiseMode mode = NoiseMode::Pessimistic;
  std::vector<double> epsilons;
  int trials = 10;
  std::uint64_t seed = 0;
  std::optional<double> normalizer;
  std::optional<double> discount;
};

struct SubsetExperiment {
  std::optional<Scenario> scenario;
  std::vector<int> subset_sizes;
  std::vector<double> mus;
  int trials = 5;
  std::uint64_t seed = 0;
  std::optional<double> normalizer;
  std::optional<double> discount;
};

namespace io_detail {

// "scenario" may be a path (relative to base_dir) or an inline object.
inline std::optional<Scenario> scenario_field(const json& j, const std::filesystem::path& base_dir,
                                              const std::string& where) {
  auto it = j.find("scenario");
  if (it == j.end()) return std::nullopt;
  if (it->is_object()) return scenario_from_json(*it, where + ".scenario");
  std::filesystem::path p = get_as<std::string>(*it, where + ".scenario");
  if (p.is_relative()) p = base_dir / p;
  return load_scenario(p);
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return get_as<T>(*it, where + "." + key);
}

}  // namespace io_detail

inline NoiseExperiment noise_experiment_from_json(const json& j, const std::filesystem::path& base_dir,
                                                  const std::string& where = "config") {
  using namespace io_detail;
  NoiseExperiment x;
  x.scenario = scenario_field(j, base_dir, where);
  x.mode = parse_noise_mode(get_as<std::string>(field(j, "mode", where), where + ".mode"));
  x.epsilons = get_as<std::vector<double>>(field(j, "epsilons", where), where + ".epsilons");
  x.trials = optional_field<int>(j, "trials", where).value_or(10);
  x.seed = optional_field<std::uint64_t>(j, "seed", where).value_or(0);
  x.normalizer = optional_field<double>(j, "normalizer", where);
  x.discount = optional_field<double>(j, "discount", where);
  if (x.epsilons.empty()) throw FormatError(where + ".epsilons: must not be empty");
  return x;
}

inline SubsetExperiment subset_experiment_from_json(const json& j, const std::filesystem::path& base_dir,
                                                    const std::string& where = "config") {
  using namespace io_detail;
  SubsetExperiment x;
  x.scenario = scenario_field(j, base_dir, where);
  x.subset_sizes = get_as<std::vector<int>>(field(j, "subsetSizes", where), where + ".subsetSizes");
  x.mus = get_as<std::vector<double>>(field(j, "mus", where), where + ".mus");
  x.trials = optional_field<int>(j, "trials", where).value_or(5);
  x.seed = optional_field<std::uint64_t>(j, "seed", where).value_or(0);
  x.normalizer = optional_field<double>(j, "normalizer", where);
  x.discount = optional_field<double>(j, "discount", where);
  if (x.subset_sizes.empty() || x.mus.empty()) {
    throw FormatError(where + ": subsetSizes and mus must not be empty");
  }
  return x;
}

inline SweepResult run_experiment(const Scenario& scenario, const NoiseExperiment& x) {
  return run_noise_sweep(scenario, x.epsilons, x.mode, x.trials,
                         x.discount.value_or(scenario.discount()), x.seed, x.normalizer);
}

inline SweepResult run_experiment(const Scenario& scenario, const SubsetExperiment& x) {
  return run_subset_sweep(scenario, x.subset_sizes, x.mus, x.trials,
                          x.discount.value_or(scenario.discount()), x.seed, x.normalizer);
}

}  // namespace aita
