#pragma once

// HTTP/JSON front end over the engine. Scenarios are immutable snapshots;
// handlers only read them, so the store's lock guards id allocation and
// insertion alone.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>

#include "aita/alloc.hpp"
#include "aita/counterfactual.hpp"
#include "aita/explanation.hpp"
#include "aita/io.hpp"
#include "aita/negotiation.hpp"
#include "aita/noise.hpp"
#include "httplib.h"

namespace aita {

class SessionStore {
 public:
  explicit SessionStore(std::optional<std::filesystem::path> directory = std::nullopt)
      : directory_(std::move(directory)) {}

  // Loads every *.json scenario in the directory. Files named s<k>.json keep
  // their id; others get fresh ids.
  void load_directory() {
    if (!directory_) return;
    std::filesystem::create_directories(*directory_);
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(*directory_))
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::unique_lock lock(mutex_);
    for (const auto& p : files) {
      auto scenario = std::make_shared<const Scenario>(load_scenario(p));
      std::string stem = p.stem().string();
      std::optional<std::uint64_t> k = parse_id(stem);
      if (!k || scenarios_.contains(stem)) {
        k = next_id_;
        stem = "s" + std::to_string(*k);
      }
      next_id_ = std::max(next_id_, *k + 1);
      scenarios_.emplace(stem, std::move(scenario));
    }
  }

  std::string add(Scenario scenario) {
    auto snapshot = std::make_shared<const Scenario>(std::move(scenario));
    std::unique_lock lock(mutex_);
    std::string id = "s" + std::to_string(next_id_++);
    if (directory_) write_text_file(*directory_ / (id + ".json"), scenario_to_json(*snapshot).dump(2));
    scenarios_.emplace(id, std::move(snapshot));
    return id;
  }

  std::shared_ptr<const Scenario> find(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = scenarios_.find(id);
    return it == scenarios_.end() ? nullptr : it->second;
  }

  void put_belief(const std::string& id, AgentId agent, BeliefModel belief) {
    auto snapshot = std::make_shared<const BeliefModel>(std::move(belief));
    std::unique_lock lock(mutex_);
    beliefs_[{id, agent.value}] = std::move(snapshot);
  }

  std::shared_ptr<const BeliefModel> belief(const std::string& id, AgentId agent) const {
    std::shared_lock lock(mutex_);
    auto it = beliefs_.find({id, agent.value});
    return it == beliefs_.end() ? nullptr : it->second;
  }

  std::vector<std::string> ids() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : scenarios_) out.push_back(id);
    return out;
  }

 private:
  static std::optional<std::uint64_t> parse_id(const std::string& stem) {
    if (stem.size() < 2 || stem[0] != 's') return std::nullopt;
    std::uint64_t v = 0;
    for (std::size_t k = 1; k < stem.size(); ++k) {
      if (stem[k] < '0' || stem[k] > '9') return std::nullopt;
      v = v * 10 + static_cast<std::uint64_t>(stem[k] - '0');
    }
    return v;
  }

  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<const Scenario>> scenarios_;
  std::map<std::pair<std::string, int>, std::shared_ptr<const BeliefModel>> beliefs_;
  std::uint64_t next_id_ = 1;
  std::optional<std::filesystem::path> directory_;
};

struct ServiceOptions {
  std::size_t enumeration_cap = kDefaultEnumerationCap;
  std::optional<std::filesystem::path> static_dir;
};

// Error raised inside a handler, carrying its HTTP status.
struct HttpError {
  int status;
  json body;
};

namespace service_detail {

inline void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw HttpError{400, {{"error", std::string("malformed JSON body: ") + e.what()}}};
  }
}

inline void check_size(const Scenario& s, std::size_t cap) {
  double count = allocation_count(s.num_humans(), s.num_tasks());
  if (count > static_cast<double>(cap)) {
    throw HttpError{413,
                    {{"error", "scenario has " + std::to_string(static_cast<long long>(count)) +
                                   " allocations, above the cap of " + std::to_string(cap)},
                     {"allocations", count}}};
  }
}

inline int agent_param(const httplib::Request& req, const Scenario& s) {
  if (!req.has_param("agent")) throw HttpError{400, {{"error", "missing query parameter 'agent'"}}};
  int agent = 0;
  try {
    agent = std::stoi(req.get_param_value("agent"));
  } catch (const std::exception&) {
    throw HttpError{400, {{"error", "agent must be an integer"}}};
  }
  if (!s.is_human(AgentId(agent))) {
    throw HttpError{400, {{"error", "agent " + std::to_string(agent) + " is not a human"}}};
  }
  return agent;
}

inline Allocation allocation_field(const std::string& text, const Scenario& s) {
  try {
    return parse_allocation(text, s.num_humans(), s.num_tasks());
  } catch (const ParseError& e) {
    throw HttpError{400, {{"error", e.what()}, {"position", e.position()}}};
  }
}

// Over HTTP a scenario is inline or referenced by id, never a server path.
inline void require_inline_scenario(const json& body) {
  if (body.is_object() && body.contains("scenario") && !body["scenario"].is_object()) {
    throw HttpError{400, {{"error", "body.scenario must be an inline scenario object; use scenarioId for stored ones"}}};
  }
}

}  // namespace service_detail

// Registers every /api route on `server`. The store must outlive it.
inline void register_routes(httplib::Server& server, SessionStore& store,
                            const ServiceOptions& options = {}) {
  using namespace service_detail;
  const std::size_t cap = options.enumeration_cap;

  // Wraps a handler with the shared error mapping.
  auto handle = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const HttpError& e) {
        reply(res, e.status, e.body);
      } catch (const CapExceeded& e) {
        reply(res, 413, {{"error", e.what()}, {"allocations", e.count()}});
      } catch (const Error& e) {
        reply(res, 400, {{"error", e.what()}});
      } catch (const json::exception& e) {
        reply(res, 400, {{"error", e.what()}});
      }
    };
  };
  auto scenario_for = [&store](const httplib::Request& req) {
    std::string id = req.path_params.at("id");
    auto s = store.find(id);
    if (!s) throw HttpError{404, {{"error", "unknown scenario '" + id + "'"}}};
    return std::make_pair(id, s);
  };

  server.Post("/api/scenarios", handle([&store, cap](const httplib::Request& req, httplib::Response& res) {
    Scenario s = scenario_from_json(parse_body(req), "body");
    check_size(s, cap);
    reply(res, 201, {{"id", store.add(std::move(s))}});
  }));

  server.Get("/api/scenarios", handle([&store](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"ids", store.ids()}});
  }));

  server.Get("/api/scenarios/:id", handle([scenario_for](const httplib::Request& req, httplib::Response& res) {
    auto [id, s] = scenario_for(req);
    json body = scenario_to_json(*s);
    body["id"] = id;
    reply(res, 200, body);
  }));

  server.Get("/api/scenarios/:id/fair", handle([scenario_for, cap](const httplib::Request& req, httplib::Response& res) {
    auto [id, s] = scenario_for(req);
    check_size(*s, cap);
    FairAllocation fair = fair_allocation(*s, cap);
    json costs = json::array();
    json bounds = json::array();
    for (int a = 0; a <= s->num_humans(); ++a) {
      costs.push_back(cost_to_json(agent_cost(*s, fair.allocation, AgentId(a))));
      if (a < s->num_humans()) bounds.push_back(cost_to_json(selfishness_bound(*s, fair.allocation, AgentId(a))));
    }
    reply(res, 200, {{"id", id},
                     {"allocation", to_string(fair.allocation)},
                     {"acceptStep", fair.accept_step},
                     {"costs", costs},
                     {"selfishnessBound", bounds},
                     {"chain", chain_to_json(fair.chain)}});
  }));

  server.Get("/api/scenarios/:id/neighbors", handle([scenario_for, cap](const httplib::Request& req, httplib::Response& res) {
    auto [id, s] = scenario_for(req);
    Allocation base = req.has_param("base") ? allocation_field(req.get_param_value("base"), *s)
                                            : fair_allocation(*s, cap).allocation;
    json list = json::array();
    for (const Allocation& a : hamming_neighbors(base, s->num_humans())) list.push_back(to_string(a));
    reply(res, 200, {{"base", to_string(base)}, {"neighbors", list}});
  }));

  server.Post("/api/scenarios/:id/beliefs", handle([&store, scenario_for](const httplib::Request& req, httplib::Response& res) {
    auto [id, s] = scenario_for(req);
    json body = parse_body(req);
    BeliefModel belief;
    if (auto it = body.find("belief"); it != body.end()) {
      belief = belief_from_json(*it, "body.belief");
    } else if (auto nz = body.find("noise"); nz != body.end()) {
      if (!body.contains("agent")) throw HttpError{400, {{"error", "body.agent is required with a noise spec"}}};
      AgentId agent(body.at("agent").get<int>());
      NoiseConfig noise;
      noise.mode = parse_noise_mode(nz->value("mode", std::string("random")));
      noise.epsilon = nz->value("epsilon", 0.0);
      noise.seed = nz->value("seed", std::uint64_t{0});
      std::set<int> exact;
      if (auto ex = body.find("exact"); ex != body.end()) {
        auto ids = ex->get<std::vector<int>>();
        exact.insert(ids.begin(), ids.end());
      }
      Rng rng(noise.seed);
      belief = build_belief_model(*s, agent, exact, noise, rng);
    } else {
      throw HttpError{400, {{"error", "body needs either 'belief' or 'noise'"}}};
    }
    belief.check_against(*s);
    store.put_belief(id, belief.owner, belief);
    reply(res, 200, belief_to_json(belief));
  }));

  server.Get("/api/scenarios/:id/optimal-counterfactual",
             handle([&store, scenario_for, cap](const httplib::Request& req, httplib::Response& res) {
    auto [id, s] = scenario_for(req);
    check_size(*s, cap);
    AgentId agent(agent_param(req, *s));
    auto stored = store.belief(id, agent);
    BeliefModel belief = stored ? *stored : BeliefModel::exact_copy(*s, agent);
    Allocation fair = fair_allocation(*s, cap).allocation;
    auto cf = optimal_counterfactual(*s, belief, fair, s->discount());
    json body = {{"agent", agent.value},
                 {"proposal", to_string(fair)},
                 {"beliefSource", stored ? "stored" : "exact"}};
    if (cf) {
      body["counterfactual"] = to_string(cf->foil);
      body["chain"] = chain_to_json(cf->human_chain);
    } else {
      body["counterfactual"] = nullptr;
    }
    reply(res, 200, body);
  }));

  server.Post("/api/scenarios/:id/counterfactual",
              handle([scenario_for, cap](const httplib::Request& req, httplib::Response& res) {
    auto [id, s] = scenario_for(req);
    check_size(*s, cap);
    json body = parse_body(req);
    if (!body.is_object() || !body.contains("agent") || !body.contains("allocation")) {
      throw HttpError{400, {{"error", "body needs 'agent' and 'allocation'"}}};
    }
    AgentId agent(io_detail::get_as<int>(body["agent"], "body.agent"));
    if (!s->is_human(agent)) throw HttpError{400, {{"error", "agent is not a human"}}};
    Allocation foil = allocation_field(io_detail::get_as<std::string>(body["allocation"], "body.allocation"), *s);
    Allocation fair = fair_allocation(*s, cap).allocation;
    FoilVerdict v = validate_counterfactual(*s, fair, foil, agent);
    json out = {{"agent", agent.value},
                {"proposal", to_string(fair)},
                {"counterfactual", to_string(foil)},
                {"distance", v.distance},
                {"proposalCost", cost_to_json(v.proposal_cost)},
                {"counterfactualCost", cost_to_json(v.foil_cost)}};
    switch (v.violation) {
      case FoilViolation::SameAsProposal:
      case FoilViolation::OutsideCapability:
        out["error"] = v.detail;
        out["violated"] = std::string(violation_name(v.violation));
        reply(res, 422, out);
        return;
      case FoilViolation::NotCheaper:
        out["verdict"] = "accept";
        out["detail"] = v.detail;
        reply(res, 200, out);
        return;
      default:
        break;
    }
    try {
      Explanation e = explain(*s, fair, foil, agent, s->discount(), cap);
      out["verdict"] = "explained";
      out["explanation"] = explanation_to_json(e);
      reply(res, 200, out);
    } catch (const ExplanationGuaranteeViolated& e) {
      out["verdict"] = "inconsistent";
      out["error"] = e.what();
      out["explanation"] = explanation_to_json(e.partial());
      reply(res, 500, out);
    }
  }));

  server.Post("/api/experiments/noise", handle([&store](const httplib::Request& req, httplib::Response& res) {
    json body = parse_body(req);
    require_inline_scenario(body);
    NoiseExperiment x = noise_experiment_from_json(body, std::filesystem::current_path(), "body");
    if (!x.scenario) {
      if (!body.contains("scenarioId")) throw HttpError{400, {{"error", "body needs 'scenario' or 'scenarioId'"}}};
      auto s = store.find(body["scenarioId"].get<std::string>());
      if (!s) throw HttpError{404, {{"error", "unknown scenario"}}};
      x.scenario = *s;
    }
    reply(res, 200, sweep_to_json(run_experiment(*x.scenario, x)));
  }));

  server.Post("/api/experiments/subset", handle([&store](const httplib::Request& req, httplib::Response& res) {
    json body = parse_body(req);
    require_inline_scenario(body);
    SubsetExperiment x = subset_experiment_from_json(body, std::filesystem::current_path(), "body");
    if (!x.scenario) {
      if (!body.contains("scenarioId")) throw HttpError{400, {{"error", "body needs 'scenario' or 'scenarioId'"}}};
      auto s = store.find(body["scenarioId"].get<std::string>());
      if (!s) throw HttpError{404, {{"error", "unknown scenario"}}};
      x.scenario = *s;
    }
    reply(res, 200, sweep_to_json(run_experiment(*x.scenario, x)));
  }));

  if (options.static_dir) server.set_mount_point("/", options.static_dir->string());
}

}  // namespace aita
