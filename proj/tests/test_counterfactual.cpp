#include <gtest/gtest.h>

#include "aita/counterfactual.hpp"
#include "aita/noise.hpp"
#include "support.hpp"

using namespace aita;
namespace oracle = testsupport::oracle;
using testsupport::random_scenario;
using testsupport::table3;

namespace {

Allocation A(const std::string& s, int n) { return parse_allocation(s, n, s.size()); }

BeliefModel noisy(const Scenario& s, int owner, NoiseMode mode, double eps, std::uint64_t seed) {
  Rng rng(seed);
  return build_belief_model(s, AgentId(owner), {}, {mode, eps, seed, 1}, rng);
}

}  // namespace

TEST(BelievedCost, ZeroNoiseEqualsTruth) {
  Scenario s = random_scenario(2, 3, 3);
  for (int i = 0; i < 3; ++i) {
    BeliefModel b = noisy(s, i, NoiseMode::Random, 0.0, 5);
    for (const auto& o : enumerate_allocations(3, 3))
      for (int j = 0; j <= 3; ++j) EXPECT_EQ(believed_cost(b, o, AgentId(j)), agent_cost(s, o, AgentId(j)));
  }
}

TEST(BelievedCost, OwnRowAlwaysExact) {
  Scenario s = table3();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    BeliefModel b = noisy(s, 0, NoiseMode::Random, 3.0, seed);
    EXPECT_NEAR(believed_cost(b, A("01001", 2), AgentId(0)), 0.777, 1e-12);
  }
}

TEST(BelievedCost, PessimisticUnderestimates) {
  Scenario s = random_scenario(4, 3, 4);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    BeliefModel b = noisy(s, 1, NoiseMode::Pessimistic, 2.0, seed);
    for (const auto& o : enumerate_allocations(3, 4))
      for (int j = 0; j <= 3; ++j)
        EXPECT_LE(believed_cost(b, o, AgentId(j)), agent_cost(s, o, AgentId(j)) + 1e-12);
  }
}

TEST(BeliefModel, CheckAgainstScenario) {
  Scenario s = table3();
  BeliefModel b = BeliefModel::exact_copy(s, AgentId(1));
  EXPECT_NO_THROW(b.check_against(s));
  b.believed_costs[1][0] += 0.1;
  EXPECT_THROW(b.check_against(s), Error);
  BeliefModel c = BeliefModel::exact_copy(s, AgentId(1));
  c.believed_costs[0][0] = -1;
  EXPECT_THROW(c.check_against(s), Error);
}

TEST(OptimalCounterfactual, NoTasksMeansNoFoil) {
  Scenario s = random_scenario(8, 2, 3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    BeliefModel b = noisy(s, 1, NoiseMode::Pessimistic, 3.0, seed);
    EXPECT_FALSE(optimal_counterfactual(s, b, A("000", 2), 0.9).has_value());
  }
}

TEST(OptimalCounterfactual, AllocatorCannotAsk) {
  Scenario s = table3();
  BeliefModel b = BeliefModel::exact_copy(s, AgentId(0));
  b.owner = AgentId(2);
  EXPECT_THROW(optimal_counterfactual(s, b, A("01001", 2), 0.9), Error);
}

TEST(OptimalCounterfactual, HumanChainShape) {
  Scenario s = random_scenario(12, 3, 3);
  Allocation o = A("012", 3);
  EXPECT_EQ(capability_set(o, 3).size(), 1u + 3u * 2u);
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto cf = optimal_counterfactual(s, noisy(s, 2, NoiseMode::Pessimistic, 2.0, seed), o, 0.9);
    if (!cf) continue;
    EXPECT_EQ(cf->human_chain.size(), 7u);
    EXPECT_EQ(cf->human_chain.nodes.front().proposer, AgentId(2));
    EXPECT_EQ(cf->human_chain.view.provenance(), Provenance::Beliefs);
  }
}

TEST(OptimalCounterfactual, MatchesOracleTwoByTwo) {
  int found = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Scenario s = random_scenario(seed, 2, 2);
    Allocation fair = fair_allocation(s).allocation;
    for (int i = 0; i < 2; ++i) {
      BeliefModel b = noisy(s, i, NoiseMode::Pessimistic, 2.0, seed * 2 + static_cast<std::uint64_t>(i));
      auto cf = optimal_counterfactual(s, b, fair, 0.9);
      auto o = oracle::counterfactual(s.costs(), b.believed_costs, to_string(fair), i, 0.9);
      ASSERT_EQ(cf.has_value(), o.has_value()) << "seed " << seed << " agent " << i;
      if (cf) {
        EXPECT_EQ(to_string(cf->foil), *o);
        ++found;
      }
    }
  }
  EXPECT_GT(found, 0);
}

TEST(ValidateCounterfactual, TableThreeCases) {
  Scenario s = table3();
  FoilVerdict ok = validate_counterfactual(s, A("01001", 2), A("00001", 2), AgentId(1));
  EXPECT_TRUE(ok.ok());
  EXPECT_EQ(ok.distance, 1u);
  EXPECT_NEAR(ok.foil_cost, 0.13, 1e-12);
  EXPECT_NEAR(ok.proposal_cost, 0.83, 1e-12);

  FoilVerdict same = validate_counterfactual(s, A("01001", 2), A("01001", 2), AgentId(0));
  EXPECT_EQ(same.violation, FoilViolation::SameAsProposal);
  EXPECT_EQ(violation_name(same.violation), "property 1");

  FoilVerdict far = validate_counterfactual(s, A("01001", 2), A("10110", 2), AgentId(0));
  EXPECT_EQ(far.violation, FoilViolation::OutsideCapability);
  EXPECT_EQ(far.distance, 5u);
  EXPECT_EQ(violation_name(far.violation), "property 2");

  FoilVerdict dearer = validate_counterfactual(s, A("01001", 2), A("11001", 2), AgentId(1));
  EXPECT_EQ(dearer.violation, FoilViolation::NotCheaper);
}

TEST(ValidateCounterfactual, EquilibriumCheckWithBelief) {
  Scenario s = table3();
  BeliefModel b = BeliefModel::exact_copy(s, AgentId(1));
  FoilVerdict v = validate_counterfactual(s, A("01001", 2), A("00001", 2), AgentId(1), &b);
  auto best = optimal_counterfactual(s, b, A("01001", 2), 0.9);
  if (best && to_string(best->foil) == "00001") {
    EXPECT_TRUE(v.ok());
  } else {
    EXPECT_EQ(v.violation, FoilViolation::NotEquilibrium);
  }
}

// Property tests.

TEST(CounterfactualProperties, ReturnedFoilsValidateUnderSameBelief) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 80; ++seed) {
    Scenario s = random_scenario(seed, 2 + static_cast<int>(seed % 2), 3);
    Allocation fair = fair_allocation(s).allocation;
    for (int i = 0; i < s.num_humans(); ++i) {
      BeliefModel b = noisy(s, i, NoiseMode::Pessimistic, 3.0, seed + 100 * static_cast<std::uint64_t>(i));
      auto cf = optimal_counterfactual(s, b, fair, s.discount());
      if (!cf) continue;
      FoilVerdict v = validate_counterfactual(s, fair, cf->foil, AgentId(i), &b);
      EXPECT_TRUE(v.ok()) << v.detail;
      ++checked;
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(CounterfactualProperties, ZeroNoiseFoilsAreCheaper) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Scenario s = random_scenario(seed, 2 + static_cast<int>(seed % 2), 2 + static_cast<int>(seed % 3));
    Allocation fair = fair_allocation(s).allocation;
    for (int i = 0; i < s.num_humans(); ++i) {
      BeliefModel b = BeliefModel::exact_copy(s, AgentId(i));
      for (int j = 0; j < s.num_humans(); ++j) b.exact.insert(j);
      auto cf = optimal_counterfactual(s, b, fair, s.discount());
      if (cf) {
        EXPECT_LT(agent_cost(s, cf->foil, AgentId(i)), agent_cost(s, fair, AgentId(i)));
      }
    }
  }
}

// Optimistic teammates-overestimating beliefs should not produce foils more
// often than the truth does.
TEST(CounterfactualProperties, OptimisticNoMoreFrequentThanTruth) {
  int optimistic = 0, truth = 0;
  for (std::uint64_t k = 0; k < 300; ++k) {
    int n = 2 + static_cast<int>(k % 2), m = 2 + static_cast<int>((k / 2) % 3);
    Scenario s = random_scenario(5000 + k, n, m);
    Allocation fair = fair_allocation(s).allocation;
    for (int i = 0; i < n; ++i) {
      Rng rng(derive_seed(k, {static_cast<std::uint64_t>(i)}));
      BeliefModel b = build_belief_model(s, AgentId(i), {}, {NoiseMode::Optimistic, 1.0, 0, 1}, rng);
      optimistic += optimal_counterfactual(s, b, fair, 0.9).has_value();
      truth += optimal_counterfactual(s, BeliefModel::exact_copy(s, AgentId(i)), fair, 0.9).has_value();
    }
  }
  EXPECT_LE(optimistic, truth);
}

TEST(CounterfactualProperties, OptimisticLeavesMoreWithoutFoilThanPessimistic) {
  Scenario s = table3();
  Allocation fair = fair_allocation(s).allocation;
  for (double eps : {1.0, 2.0, 3.0}) {
    int on_none = 0, pn_none = 0;
    for (std::uint64_t t = 0; t < 50; ++t) {
      for (int i = 0; i < 2; ++i) {
        on_none += !optimal_counterfactual(s, noisy(s, i, NoiseMode::Optimistic, eps, t * 2 + i), fair, 0.9);
        pn_none += !optimal_counterfactual(s, noisy(s, i, NoiseMode::Pessimistic, eps, t * 2 + i), fair, 0.9);
      }
    }
    EXPECT_GE(on_none, pn_none) << "eps " << eps;
  }
}
