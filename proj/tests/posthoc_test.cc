#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "eqodds/errors.h"
#include "eqodds/posthoc.h"
#include "eqodds/random.h"
#include "eqodds/synthetic.h"
#include "oracles.h"

namespace eqodds::posthoc {
namespace {

using oracles::gap_of;
using oracles::random_stats;

double cross(std::array<double, 2> o, std::array<double, 2> a, std::array<double, 2> b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Point-in-convex-hull test for the four generating points of the feasible
// rate region of one group.
bool in_hull(std::array<double, 2> q, std::vector<std::array<double, 2>> pts) {
  std::sort(pts.begin(), pts.end());
  std::vector<std::array<double, 2>> hull;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t start = hull.size();
    for (const auto& p : pts) {
      while (hull.size() >= start + 2 && cross(hull[hull.size() - 2], hull.back(), p) <= 0) hull.pop_back();
      hull.push_back(p);
    }
    hull.pop_back();
    std::reverse(pts.begin(), pts.end());
  }
  if (hull.size() < 3) {
    // Degenerate hull: a segment from pts.front() to pts.back().
    const auto a = pts.front(), b = pts.back();
    if (std::abs(cross(a, b, q)) > 1e-12) return false;
    return std::min(a[0], b[0]) - 1e-12 <= q[0] && q[0] <= std::max(a[0], b[0]) + 1e-12 &&
           std::min(a[1], b[1]) - 1e-12 <= q[1] && q[1] <= std::max(a[1], b[1]) + 1e-12;
  }
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (cross(hull[i], hull[(i + 1) % hull.size()], q) < -1e-12) return false;
  }
  return true;
}

TEST(InducedRates, IdentityAndConstants) {
  Rng rng(1);
  const auto s = random_stats(rng);
  const auto same = induced_rates(DerivedPredictor::identity(), s);
  const auto flat = induced_rates(DerivedPredictor::constant(0.37), s);
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      EXPECT_DOUBLE_EQ(same.gamma[y][a], s.gamma[y][a]);
      EXPECT_DOUBLE_EQ(flat.gamma[y][a], 0.37);
    }
  }
}

TEST(InducedRates, MatchesConvexCombination) {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto s = random_stats(rng);
    DerivedPredictor p;
    for (auto& row : p.mix)
      for (double& m : row) m = rng.uniform();
    const auto r = induced_rates(p, s);
    for (int y = 0; y < 2; ++y) {
      for (int a = 0; a < 2; ++a) {
        const double g = s.gamma[y][a];
        // P(Yhat=1) g routed through mix[1][a], the rest through mix[0][a].
        EXPECT_NEAR(r.gamma[y][a], g * p.mix[1][a] + (1 - g) * p.mix[0][a], 1e-15);
      }
    }
  }
}

TEST(OptimalDerived, BayesRuleOnDEpsilonCostsOneHalf) {
  const auto law = synthetic::d_epsilon(0.1);
  const RateStatistics s{synthetic::population_rates(law, BinaryPredictor::protected_attribute()).gamma,
                         law.cell_probabilities()};
  const auto p = optimal_derived(s, 0.0);
  EXPECT_NEAR(derived_loss(p, s), 0.5, 1e-12);
  EXPECT_LE(gap_of(induced_rates(p, s).gamma), 1e-12);
}

TEST(OptimalDerived, ZeroGapBaseIsNotWorsened) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    auto s = random_stats(rng);
    s.gamma[0][1] = s.gamma[0][0];
    s.gamma[1][1] = s.gamma[1][0];
    const auto p = optimal_derived(s, 0.0);
    EXPECT_LE(derived_loss(p, s), derived_loss(DerivedPredictor::identity(), s) + 1e-12);
  }
}

TEST(OptimalDerived, MatchesGridSearch) {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto s = random_stats(rng);
    const double tol = t % 2 == 0 ? 0.0 : 0.05;
    const auto p = optimal_derived(s, tol);
    const double lp = derived_loss(p, s);
    const double grid = oracles::grid_search_derived(s, tol, 0.01);
    EXPECT_NEAR(lp, grid, 0.02) << "instance " << t;
  }
}

TEST(OptimalDerived, ConstraintHoldsAndHullContainsRates) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto s = random_stats(rng);
    const double tol = 0.1 * rng.uniform();
    const auto p = optimal_derived(s, tol);
    for (const auto& row : p.mix)
      for (double m : row) {
        EXPECT_GE(m, 0.0);
        EXPECT_LE(m, 1.0);
      }
    const auto r = induced_rates(p, s);
    EXPECT_LE(gap_of(r.gamma), tol + 1e-12);
    for (int a = 0; a < 2; ++a) {
      const double g0 = s.gamma[0][a], g1 = s.gamma[1][a];
      EXPECT_TRUE(in_hull({r.gamma[0][a], r.gamma[1][a]}, {{0, 0}, {1, 1}, {g0, g1}, {1 - g0, 1 - g1}}));
    }
  }
}

TEST(OptimalDerived, LossNonIncreasingInTolerance) {
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    const auto s = random_stats(rng);
    double prev = 2.0;
    for (double tol = 0.0; tol <= 1.0; tol += 0.1) {
      const double l = derived_loss(optimal_derived(s, tol), s);
      EXPECT_LE(l, prev + 1e-12);
      prev = l;
    }
  }
}

TEST(OptimalDerived, DeterministicTieBreak) {
  // Every constant mix costs 1/2 here; the lexicographic rule picks all zeros.
  RateStatistics s;
  s.gamma = {{{0.0, 1.0}, {0.0, 1.0}}};
  const auto p = optimal_derived(s, 0.0);
  for (const auto& row : p.mix)
    for (double m : row) EXPECT_EQ(m, 0.0);
}

TEST(OptimalDerived, RejectsInvalidInput) {
  RateStatistics s;
  s.gamma = {{{0.2, 1.2}, {0.5, 0.5}}};
  EXPECT_THROW(optimal_derived(s, 0.0), InvalidParameterError);
  s.gamma = {{{0.2, 0.2}, {0.5, 0.5}}};
  EXPECT_THROW(optimal_derived(s, -0.1), InvalidParameterError);
  EXPECT_THROW(optimal_derived(s, 1.1), InvalidParameterError);
}

TEST(Conservative, ZeroGapKeepsRates) {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    auto s = random_stats(rng);
    // Ordered rates with equal groups.
    const double fp = 0.5 * rng.uniform(), tp = 0.5 + 0.5 * rng.uniform();
    s.gamma = {{{fp, fp}, {tp, tp}}};
    const auto p = conservative_correction(s);
    const auto r = induced_rates(p, s);
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a) EXPECT_NEAR(r.gamma[y][a], s.gamma[y][a], 1e-12);
    EXPECT_NEAR(derived_loss(p, s), loss_from_rates(s.gamma, s.cells), 1e-12);
  }
}

TEST(Conservative, BoundAndDominance) {
  Rng rng(8);
  for (int t = 0; t < 500; ++t) {
    const auto s = random_stats(rng);
    const auto c = conservative_correction(s);
    const auto r = induced_rates(c, s);
    EXPECT_LE(gap_of(r.gamma), 1e-12);
    const double lh = loss_from_rates(s.gamma, s.cells);
    const double bound = lh + gap_of(s.gamma);
    const double lc = derived_loss(c, s);
    EXPECT_LE(lc, bound + 1e-12);
    EXPECT_LE(derived_loss(optimal_derived(s, 0.0), s), lc + 1e-12);
  }
}

TEST(Conservative, OrientedCaseUsesWorstRates) {
  RateStatistics s;
  s.gamma = {{{0.1, 0.3}, {0.9, 0.7}}};
  const auto c = conservative_correction(s);
  EXPECT_FALSE(c.base_flipped);
  EXPECT_FALSE(c.constant_fallback);
  const auto r = induced_rates(c, s);
  for (int a = 0; a < 2; ++a) {
    EXPECT_NEAR(r.gamma[0][a], 0.3, 1e-12);
    EXPECT_NEAR(r.gamma[1][a], 0.7, 1e-12);
  }
  s.gamma = {{{0.9, 0.7}, {0.1, 0.3}}};
  EXPECT_TRUE(conservative_correction(s).base_flipped);
}

TEST(Conservative, BayesRuleOnDEpsilon) {
  const auto law = synthetic::d_epsilon(0.1);
  const RateStatistics s{synthetic::population_rates(law, BinaryPredictor::protected_attribute()).gamma,
                         law.cell_probabilities()};
  const auto c = conservative_correction(s);
  EXPECT_NEAR(derived_loss(c, s), 0.5, 1e-12);
  EXPECT_NEAR(synthetic::population_loss_01(law, c.apply(BinaryPredictor::protected_attribute())), 0.5, 1e-12);
}

}  // namespace
}  // namespace eqodds::posthoc
