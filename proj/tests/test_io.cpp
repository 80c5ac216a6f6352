#include <gtest/gtest.h>

#include <filesystem>

#include "aita/io.hpp"
#include "support.hpp"

using namespace aita;
using testsupport::table3;

namespace {

const std::filesystem::path kData = AITA_DATA_DIR;

Allocation A(const std::string& s, int n) { return parse_allocation(s, n, s.size()); }

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ScenarioJson, GoldenFileMatchesTableThree) {
  Scenario s = load_scenario(kData / "table3.json");
  EXPECT_EQ(s.costs(), table3().costs());
  EXPECT_EQ(s.num_humans(), 2);
  EXPECT_EQ(s.tasks().size(), 5u);
  EXPECT_EQ(s.performance().kind, PerformanceKind::Makespan);
  EXPECT_EQ(s.discount(), 0.9);
}

TEST(ScenarioJson, RoundTrip) {
  Scenario s(2, {"a", "b"}, {{0.1, kIncapable}, {0.3, 0.4}}, {PerformanceKind::Table, {0.5, 0.6, 0.7, 0.8}}, 0.75);
  json j = scenario_to_json(s);
  EXPECT_EQ(j["costs"][0][1], "incapable");
  Scenario back = scenario_from_json(json::parse(j.dump()));
  EXPECT_EQ(scenario_to_json(back), j);
  EXPECT_TRUE(std::isinf(back.costs()[0][1]));
}

TEST(ScenarioJson, DefaultsApply) {
  Scenario s = scenario_from_json(json::parse(R"({"agents": 1, "tasks": ["x"], "costs": [[0.5]]})"));
  EXPECT_EQ(s.performance().kind, PerformanceKind::Makespan);
  EXPECT_EQ(s.discount(), kDefaultDiscount);
  Scenario t = scenario_from_json(json::parse(
      R"({"agents": 1, "tasks": ["x"], "costs": [[0.5]], "performance": {"model": "total"}})"));
  EXPECT_EQ(t.performance().kind, PerformanceKind::TotalTime);
}

TEST(ScenarioJson, ErrorsNameTheField) {
  EXPECT_NE(message_of([] { scenario_from_json(json::parse(R"({"tasks": ["x"], "costs": [[1]]})"), "f.json"); })
                .find("f.json: missing field 'agents'"),
            std::string::npos);
  EXPECT_NE(message_of([] {
              scenario_from_json(json::parse(R"({"agents": 1, "tasks": ["x"], "costs": [["a"]]})"), "f.json");
            }).find("f.json.costs[0][0]"),
            std::string::npos);
  EXPECT_NE(message_of([] {
              scenario_from_json(
                  json::parse(R"({"agents": 1, "tasks": ["x"], "costs": [[1]], "performance": {"model": "fastest"}})"),
                  "f.json");
            }).find("fastest"),
            std::string::npos);
  EXPECT_THROW(scenario_from_json(json::parse(R"({"agents": 2, "tasks": ["x"], "costs": [[1]]})")), FormatError);
}

TEST(ScenarioJson, MissingFile) {
  std::string msg = message_of([] { load_scenario("/no/such/scenario.json"); });
  EXPECT_NE(msg.find("file not found"), std::string::npos);
  EXPECT_NE(msg.find("/no/such/scenario.json"), std::string::npos);
}

TEST(BeliefJson, RoundTripAndOwnerExact) {
  BeliefModel b = belief_from_json(read_json_file(kData / "table3_belief_h1.json"));
  EXPECT_EQ(b.owner, AgentId(1));
  EXPECT_TRUE(b.exact.contains(1));
  EXPECT_NO_THROW(b.check_against(table3()));
  BeliefModel back = belief_from_json(json::parse(belief_to_json(b).dump()));
  EXPECT_EQ(back.believed_costs, b.believed_costs);
  EXPECT_EQ(back.exact, b.exact);
  EXPECT_EQ(back.owner, b.owner);
}

TEST(ChainJson, CarriesDecisionsAndOutcome) {
  FairAllocation fair = fair_allocation(table3());
  json j = chain_to_json(fair.chain);
  ASSERT_EQ(j["nodes"].size(), 32u);
  EXPECT_EQ(j["outcome"]["allocation"], "11101");
  EXPECT_EQ(j["outcome"]["step"], 4);
  EXPECT_EQ(j["nodes"][0]["proposer"], 2);
  EXPECT_EQ(j["nodes"][0]["decisions"].size(), 2u);
  EXPECT_EQ(j["nodes"][0]["decisions"][0]["accept"], false);
  EXPECT_EQ(j["nodes"][4]["spe"]["step"], 4);
  EXPECT_EQ(j["provenance"], "true-costs");
}

TEST(ExplanationJson, Schema) {
  Explanation e = explain(table3(), A("11101", 2), A("11111", 2), AgentId(0), 0.9);
  json j = explanation_to_json(e);
  for (const char* key : {"style", "humans", "questioner", "original", "counterfactual", "originalCost", "steps",
                          "length", "finalAllocation", "finalCostToQuestioner"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["style"], "tree");
  EXPECT_EQ(j["steps"].back()["rejection"], nullptr);
  EXPECT_TRUE(j["steps"].front()["rejection"].contains("agent"));
  EXPECT_EQ(explanation_from_json(j), e);
}

TEST(ExperimentJson, ResolvesScenarioRelativeToConfig) {
  NoiseExperiment x = noise_experiment_from_json(read_json_file(kData / "noise_pn.json"), kData);
  ASSERT_TRUE(x.scenario.has_value());
  EXPECT_EQ(x.scenario->costs(), table3().costs());
  EXPECT_EQ(x.mode, NoiseMode::Pessimistic);
  EXPECT_EQ(x.epsilons.size(), 8u);
  EXPECT_EQ(x.trials, 10);
  EXPECT_EQ(x.seed, 2024u);
  SubsetExperiment y = subset_experiment_from_json(read_json_file(kData / "subset_4x4.json"), kData);
  ASSERT_TRUE(y.scenario.has_value());
  EXPECT_EQ(y.scenario->num_humans(), 4);
  EXPECT_EQ(y.normalizer, 256.0);
  EXPECT_EQ(y.mus, (std::vector<double>{1, 3, 5}));
}

TEST(ExperimentJson, InlineScenarioAndErrors) {
  json j = {{"scenario", scenario_to_json(table3())}, {"mode", "ON"}, {"epsilons", {1, 2}}};
  NoiseExperiment x = noise_experiment_from_json(j, ".");
  EXPECT_EQ(x.mode, NoiseMode::Optimistic);
  EXPECT_THROW(noise_experiment_from_json(json{{"mode", "PN"}, {"epsilons", json::array()}}, "."), FormatError);
  EXPECT_THROW(noise_experiment_from_json(json{{"epsilons", {1}}}, "."), FormatError);
  EXPECT_THROW(subset_experiment_from_json(json{{"subsetSizes", {1}}}, "."), FormatError);
}

TEST(SweepJson, Shape) {
  SweepResult r = run_noise_sweep(table3(), {0, 1}, NoiseMode::Pessimistic, 2, 0.9, 1, 31.0);
  json j = sweep_to_json(r);
  EXPECT_EQ(j["rows"].size(), 8u);
  EXPECT_EQ(j["aggregates"].size(), 2u);
  EXPECT_EQ(j["normalizer"], 31.0);
  EXPECT_TRUE(j["rows"][0].contains("relativeLength"));
  EXPECT_TRUE(j.contains("guaranteeViolations"));
}
