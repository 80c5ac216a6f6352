#pragma once

// Command-line front end. Exit status: 0 success, 1 domain error, 2 usage.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aita/alloc.hpp"
#include "aita/counterfactual.hpp"
#include "aita/explanation.hpp"
#include "aita/format.hpp"
#include "aita/io.hpp"
#include "aita/negotiation.hpp"
#include "aita/noise.hpp"
#include "aita/service.hpp"

namespace aita {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kDefaultPort = 8080;

namespace cli_detail {

inline void print_solve(std::ostream& out, const Scenario& s, const FairAllocation& fair) {
  out << "fair allocation: " << to_string(fair.allocation) << "\n";
  out << "accepted at step " << fair.accept_step << " of " << fair.chain.size() << "\n";
  for (int a = 0; a <= s.num_humans(); ++a) {
    out << "  " << agent_label(AgentId(a), s.num_humans()) << " cost "
        << format_number(agent_cost(s, fair.allocation, AgentId(a))) << "\n";
  }
  out << "chain prefix:\n";
  for (int k = 0; k <= fair.accept_step; ++k) {
    const ChainNode& node = fair.chain.nodes[static_cast<std::size_t>(k)];
    out << "  " << k << ". " << agent_label(node.proposer, s.num_humans()) << " offers "
        << to_string(node.offer);
    if (const Decision* r = node.first_rejection()) {
      out << ", " << agent_label(r->agent, s.num_humans()) << " rejects ("
          << format_number(r->offer_cost) << " > " << format_number(r->continuation_cost) << ")";
    } else {
      out << ", accepted";
    }
    out << "\n";
  }
}

inline void print_sweep_summary(std::ostream& out, const SweepResult& r) {
  const bool subset = r.kind == SweepKind::Subset;
  out << (subset ? "mu\tsubset\tmean\tstddev" : "epsilon\tmean\tstddev");
  if (r.normalizer) out << "\trel_mean";
  out << "\n";
  std::vector<double> xs, ys;
  for (const SweepAggregate& a : r.aggregates) {
    out << format_number(a.epsilon) << '\t';
    if (subset) out << a.subset.value_or(0) << '\t';
    out << format_fixed(a.mean, 4) << '\t' << format_fixed(a.stddev, 4);
    if (a.relative_mean) out << '\t' << format_fixed(*a.relative_mean, 6);
    out << "\n";
    xs.push_back(a.epsilon);
    ys.push_back(a.mean);
  }
  if (!subset && xs.size() >= 2) {
    out << "spearman(epsilon, mean length) = " << format_fixed(spearman(xs, ys), 4) << "\n";
  }
  out << "replays that broke the cost guarantee: " << r.guarantee_violations() << " of "
      << r.rows.size() << "\n";
}

inline BeliefModel load_belief(const std::filesystem::path& path, AgentId agent) {
  json j = read_json_file(path);
  if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k) {
      BeliefModel b = belief_from_json(j[k], path.string() + "[" + std::to_string(k) + "]");
      if (b.owner == agent) return b;
    }
    throw Error(path.string() + ": no belief owned by agent " + to_string(agent));
  }
  BeliefModel b = belief_from_json(j, path.string());
  if (b.owner != agent) {
    throw Error(path.string() + ": belief is owned by agent " + to_string(b.owner) +
                ", not " + to_string(agent));
  }
  return b;
}

inline int default_port() {
  if (const char* env = std::getenv("AITA_PORT")) {
    try {
      return std::stoi(env);
    } catch (const std::exception&) {
    }
  }
  return kDefaultPort;
}

}  // namespace cli_detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  using namespace cli_detail;
  CLI::App app{"Negotiation-aware task allocation with contrastive explanations", "aita"};
  app.require_subcommand(1);

  std::string scenario_path, belief_path, alloc_text, foil_text, config_path, out_path;
  int agent = 0;

  bool solve_json = false, solve_dot = false;
  auto* solve = app.add_subcommand("solve", "Compute the negotiation-aware fair allocation");
  solve->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  solve->add_flag("--json", solve_json, "Print the annotated chain as JSON");
  solve->add_flag("--dot", solve_dot, "Print the chain as a DOT graph");

  auto* counterfactual = app.add_subcommand("counterfactual", "Optimal counterfactual of one human");
  counterfactual->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  counterfactual->add_option("beliefs", belief_path, "Belief JSON file")->required();
  counterfactual->add_option("allocation", alloc_text, "Proposed allocation")->required();
  counterfactual->add_option("--agent", agent, "Questioning human")->required();

  std::string style_text = "tree", format_text = "text";
  auto* explain_cmd = app.add_subcommand("explain", "Refute a counterfactual");
  explain_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  explain_cmd->add_option("allocation", alloc_text, "Proposed allocation")->required();
  explain_cmd->add_option("foil", foil_text, "Counterfactual allocation")->required();
  explain_cmd->add_option("--agent", agent, "Questioning human")->required();
  explain_cmd->add_option("--style", style_text, "tree, vacuous or verbose")
      ->check(CLI::IsMember({"tree", "vacuous", "verbose"}));
  explain_cmd->add_option("--format", format_text, "text, json or dot")
      ->check(CLI::IsMember({"text", "json", "dot"}));

  auto* sweep_noise = app.add_subcommand("sweep-noise", "Explanation length against noise radius");
  sweep_noise->add_option("config", config_path, "Experiment config JSON")->required();
  sweep_noise->add_option("--out", out_path, "CSV output path")->required();

  auto* sweep_subset = app.add_subcommand("sweep-subset", "Explanation length against known teammates");
  sweep_subset->add_option("config", config_path, "Experiment config JSON")->required();
  sweep_subset->add_option("--out", out_path, "CSV output path")->required();

  int port = default_port();
  std::string scenario_dir, static_dir;
  auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
  serve->add_option("--port", port, "Listening port (default $AITA_PORT or 8080)");
  serve->add_option("--scenario-dir", scenario_dir, "Directory of persisted scenarios");
  serve->add_option("--static-dir", static_dir, "Directory of static UI assets");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve) {
      Scenario s = load_scenario(scenario_path);
      FairAllocation fair = fair_allocation(s);
      if (solve_json) {
        json j = {{"allocation", to_string(fair.allocation)},
                  {"acceptStep", fair.accept_step},
                  {"chain", chain_to_json(fair.chain)}};
        out << j.dump(2) << "\n";
      } else if (solve_dot) {
        out << chain_to_dot(fair.chain);
      } else {
        print_solve(out, s, fair);
      }
    } else if (*counterfactual) {
      Scenario s = load_scenario(scenario_path);
      BeliefModel belief = load_belief(belief_path, AgentId(agent));
      belief.check_against(s);
      Allocation o = parse_allocation(alloc_text, s.num_humans(), s.num_tasks());
      auto cf = optimal_counterfactual(s, belief, o, s.discount());
      out << (cf ? to_string(cf->foil) : std::string("none")) << "\n";
    } else if (*explain_cmd) {
      Scenario s = load_scenario(scenario_path);
      Allocation o = parse_allocation(alloc_text, s.num_humans(), s.num_tasks());
      Allocation foil = parse_allocation(foil_text, s.num_humans(), s.num_tasks());
      Explanation e = baseline_explanation(s, o, foil, AgentId(agent), parse_explanation_style(style_text));
      out << render_explanation(e, parse_render_format(format_text));
    } else if (*sweep_noise) {
      std::filesystem::path cfg(config_path);
      NoiseExperiment x = noise_experiment_from_json(read_json_file(cfg), cfg.parent_path(), cfg.string());
      if (!x.scenario) throw FormatError(cfg.string() + ": missing field 'scenario'");
      SweepResult r = run_experiment(*x.scenario, x);
      export_csv(r, out_path);
      print_sweep_summary(out, r);
    } else if (*sweep_subset) {
      std::filesystem::path cfg(config_path);
      SubsetExperiment x = subset_experiment_from_json(read_json_file(cfg), cfg.parent_path(), cfg.string());
      if (!x.scenario) throw FormatError(cfg.string() + ": missing field 'scenario'");
      SweepResult r = run_experiment(*x.scenario, x);
      export_csv(r, out_path);
      print_sweep_summary(out, r);
    } else if (*serve) {
      std::optional<std::filesystem::path> dir;
      if (!scenario_dir.empty()) dir = scenario_dir;
      SessionStore store(dir);
      store.load_directory();
      ServiceOptions options;
      if (!static_dir.empty()) options.static_dir = static_dir;
      httplib::Server server;
      server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
      });
      register_routes(server, store, options);
      if (!server.bind_to_port("0.0.0.0", port)) {
        err << "error: cannot listen on port " << port << " (in use?)\n";
        return kExitDomain;
      }
      out << "serving on port " << port << std::endl;
      server.listen_after_bind();
    }
  } catch (const ExplanationGuaranteeViolated& e) {
    err << "error: explanation guarantee violated: " << e.what() << "\n";
    return kExitDomain;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitOk;
}

}  // namespace aita
