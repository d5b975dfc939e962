#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "realm/prng.hpp"
#include "realm/spl.hpp"

using namespace realm;

TEST(ClosedFormWeight, Examples) {
  EXPECT_EQ(closed_form_weight(0.0, 0.15), 1.0);
  EXPECT_NEAR(closed_form_weight(1.0, 1.0), 1.0 / std::sqrt(3.0), 1e-12);
}

TEST(EataClosedFormWeight, AgreesWithSEnt) {
  EXPECT_EQ(eata_closed_form_weight(1.0, 1.0), 0.0);
  EXPECT_EQ(eata_closed_form_weight(1.5, 1.0), 0.0);
  EXPECT_NEAR(eata_closed_form_weight(1.0 - std::log(2.0), 1.0), 2.0, 1e-14);
  SplitMix64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const double lam = 0.1 + 2.0 * rng.uniform();
    const double loss = 3.0 * rng.uniform();
    EXPECT_EQ(eata_closed_form_weight(loss, lam), s_ent(loss, lam));
  }
}

TEST(BruteForceWeight, ZeroLossPicksFullWeight) {
  const auto r = brute_force_weight({0.0, 0.15, 1e-4});
  EXPECT_EQ(r.w_star, 1.0);
  EXPECT_NEAR(r.value, 0.0, 1e-12);
}

TEST(BruteForceWeight, AlphaOneExample) {
  const auto r = brute_force_weight({1.0, 1.0, 1e-4});
  EXPECT_NEAR(r.w_star, 1.0 / std::sqrt(3.0), 1e-4);
  EXPECT_NEAR(r.value, std::sqrt(3.0) - 1.0, 1e-4);
}

TEST(BruteForceWeight, ValidatesInput) {
  EXPECT_THROW(brute_force_weight({1.0, 1.0, 0.0}), std::domain_error);
  EXPECT_THROW(brute_force_weight({1.0, 1.0, 0.05}), std::domain_error);
  EXPECT_THROW(brute_force_weight({-1.0, 1.0, 1e-3}), std::domain_error);
  EXPECT_THROW(brute_force_weight({1.0, 2.0, 1e-3}), std::domain_error);
}

TEST(BruteForceWeight, MatchesClosedFormAcrossGrid) {
  for (double a : {0.15, 0.5, 1.0, 1.5, 1.9}) {
    for (double t : {0.0, 0.2, 1.0, 3.3, 10.0}) {
      const auto r = brute_force_weight({t, a, 1e-4});
      EXPECT_NEAR(r.w_star, closed_form_weight(t, a), 2e-4) << t << " " << a;
      EXPECT_NEAR(r.value, rho_canonical(t, a), 1e-4) << t << " " << a;
    }
  }
}

TEST(FirstOrderCondition, HoldsAtClosedFormWeight) {
  for (double a : {0.15, 0.5, 1.0, 1.5}) {
    for (double t : {0.1, 1.0, 4.0}) {
      const double w = closed_form_weight(t, a);
      const double h = 1e-7;
      const double gp = (g_reg(w + h, a) - g_reg(w - h, a)) / (2 * h);
      EXPECT_NEAR(t + gp, 0.0, 1e-3);
    }
  }
}

TEST(EataBruteForce, RecoversIndicatorOnly) {
  // A literal argmin over [0, 1] yields the 0/1 indicator, not the exponential factor.
  EXPECT_EQ(eata_brute_force_weight(0.3, 1.0, 1e-3).w_star, 1.0);
  EXPECT_EQ(eata_brute_force_weight(1.7, 1.0, 1e-3).w_star, 0.0);
  for (double loss : {0.0, 0.4, 0.99, 1.01, 2.0}) {
    const double w = eata_brute_force_weight(loss, 1.0, 1e-3).w_star;
    EXPECT_EQ(w > 0.0, s_ent(loss, 1.0) > 0.0);
  }
}

TEST(EquivalenceCheck, FullGridPasses) {
  const auto r = equivalence_check(linear_grid(0.0, 10.0, 101), {0.15, 0.5, 1.0, 1.5, 1.9});
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.cells.size(), 505u);
  EXPECT_EQ(r.t_count, 101u);
  EXPECT_EQ(r.alpha_count, 5u);
  EXPECT_LE(r.max_value_dev, 1e-4);
  EXPECT_LE(r.max_w_dev, 2e-4);
}

TEST(EquivalenceCheck, ZeroToleranceFails) {
  const auto r = equivalence_check(linear_grid(0.0, 10.0, 101), {0.15, 0.5, 1.0, 1.5, 1.9}, 0.0);
  EXPECT_FALSE(r.pass);
}

TEST(EquivalenceCheck, BadCellIsRecordedNotThrown) {
  const auto r = equivalence_check({1.0, -1.0}, {1.0});
  EXPECT_FALSE(r.pass);
  ASSERT_EQ(r.cells.size(), 2u);
  EXPECT_TRUE(r.cells[0].pass);
  EXPECT_FALSE(r.cells[1].pass);
  EXPECT_FALSE(r.cells[1].error.empty());
}

TEST(EquivalenceCheck, ArgumentErrors) {
  EXPECT_THROW(equivalence_check({}, {1.0}), std::invalid_argument);
  EXPECT_THROW(equivalence_check({1.0}, {1.0}, -1.0), std::invalid_argument);
}

TEST(LinearGrid, Endpoints) {
  const auto g = linear_grid(0.0, 10.0, 101);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 10.0);
  EXPECT_NEAR(g[37], 3.7, 1e-14);
}
