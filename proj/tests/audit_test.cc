#include <gtest/gtest.h>

#include <cmath>

#include "eqodds/audit.h"
#include "eqodds/errors.h"
#include "eqodds/posthoc.h"
#include "eqodds/random.h"
#include "eqodds/synthetic.h"

namespace eqodds::audit {
namespace {

Dataset tiny_balanced() {
  std::vector<LabeledSample> rows;
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < 5; ++i) rows.push_back({{double(i)}, a, y});
  return Dataset(rows);
}

TEST(Gap, Extremes) {
  GroupRates r;
  r.present = {{{true, true}, {true, true}}};
  r.gamma = {{{0.3, 0.3}, {0.8, 0.8}}};
  EXPECT_EQ(discrimination_gap(r), 0.0);
  r.gamma = {{{0.0, 1.0}, {0.0, 1.0}}};
  EXPECT_EQ(discrimination_gap(r), 1.0);
}

TEST(Gap, BayesRuleOnDEpsilon) {
  const auto law = synthetic::d_epsilon(0.1);
  const auto r = synthetic::population_rates(law, BinaryPredictor::protected_attribute());
  EXPECT_NEAR(r.gamma[0][1], 1.0, 1e-15);
  EXPECT_NEAR(r.gamma[1][1], 1.0, 1e-15);
  EXPECT_NEAR(r.gamma[0][0], 0.0, 1e-15);
  EXPECT_NEAR(r.gamma[1][0], 0.0, 1e-15);
  EXPECT_NEAR(discrimination_gap(r), 1.0, 1e-15);
}

TEST(RequiredSampleSize, MatchesFormula) {
  // min cell 0.15, alpha 0.2, delta 0.1.
  const CellProbabilities cells({{{0.15, 0.35}, {0.25, 0.25}}});
  const double expect = std::ceil(16.0 * std::log(320.0) / (0.04 * 0.15));
  EXPECT_EQ(required_sample_size(0.2, 0.1, cells), static_cast<std::int64_t>(expect));
  // D_eps(0.1) at alpha = 0.5.
  const auto dcells = synthetic::d_epsilon(0.1).cell_probabilities();
  EXPECT_EQ(required_sample_size(0.5, 0.1, dcells), 7384);
}

TEST(Detect, ZeroGapPasses) {
  const auto data = tiny_balanced();
  const auto r = detect(data, BinaryPredictor::constant(1), 0.3, 0.1);
  EXPECT_EQ(r.gap, 0.0);
  EXPECT_EQ(r.decision, Decision::kPass);
  EXPECT_FALSE(r.certified);
  EXPECT_FALSE(r.cell_probabilities_supplied);
  EXPECT_EQ(r.band, Band::kZeroConsistent);
}

TEST(Detect, FlagIffAboveHalfAlpha) {
  const auto data = tiny_balanced();
  const auto r = detect(data, BinaryPredictor::protected_attribute(), 0.5, 0.1);
  EXPECT_EQ(r.gap, 1.0);
  EXPECT_EQ(r.decision, Decision::kFlag);
  EXPECT_EQ(r.threshold, 0.25);
}

TEST(Detect, RejectsBadParameters) {
  const auto data = tiny_balanced();
  const auto h = BinaryPredictor::constant(0);
  EXPECT_THROW(detect(data, h, 0.0, 0.1), InvalidParameterError);
  EXPECT_THROW(detect(data, h, 1.0, 0.1), InvalidParameterError);
  EXPECT_THROW(detect(data, h, 0.5, 0.5), InvalidParameterError);
  EXPECT_THROW(detect(Dataset({{{0.0}, 0, 0}, {{0.0}, 1, 0}}), h, 0.5, 0.1), EmptyCellError);
}

TEST(Detect, MonotoneInAlpha) {
  const auto law = synthetic::d_epsilon(0.15);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = law.sample(300, seed);
    const auto h = BinaryPredictor::threshold(0, 0.5);
    bool flagged_before = true;
    for (double alpha = 0.05; alpha < 1.0; alpha += 0.05) {
      const bool flag = detect(data, h, alpha, 0.1).decision == Decision::kFlag;
      // Once passed, larger alpha never flags again.
      if (!flagged_before) EXPECT_FALSE(flag);
      flagged_before = flag;
    }
  }
}

TEST(Detect, DerivedFromZeroGapRatesKeepsZeroGap) {
  const auto law = synthetic::d_epsilon(0.1);
  const auto data = law.sample(500, 3);
  const auto h = BinaryPredictor::constant(1);
  posthoc::DerivedPredictor p;
  p.mix = {{{0.2, 0.7}, {0.4, 0.4}}};
  EXPECT_NEAR(detect(data, p.apply(h), 0.5, 0.1).gap, 0.0, 1e-15);
}

TEST(ConcentrationRadius, FormulaAndScaling) {
  const auto cells = CellProbabilities::uniform();
  EXPECT_NEAR(concentration_radius(cells, 4096, 0.1), 2.0 * std::sqrt(std::log(160.0) / 1024.0), 1e-15);
  const double r1 = concentration_radius(cells, 4096, 0.1);
  const double r4 = concentration_radius(cells, 4 * 4096, 0.1);
  EXPECT_NEAR(r1 / r4, 2.0, 1e-12);
  EXPECT_GT(concentration_radius(CellProbabilities({{{0.1, 0.4}, {0.25, 0.25}}}), 4096, 0.1), r1);

  const auto min_n = concentration_min_n(cells, 0.1);
  EXPECT_GT(static_cast<double>(min_n), 8.0 * std::log(80.0) / 0.25);
  try {
    concentration_radius(cells, min_n - 1, 0.1);
    FAIL();
  } catch (const PreconditionUnmetError& e) {
    EXPECT_EQ(e.min_n(), min_n);
  }
}

TEST(ConcentrationRadius, MonteCarloCoverage) {
  const double delta = 0.1;
  const auto law = synthetic::d_epsilon(0.1);
  const auto cells = law.cell_probabilities();
  const auto h = BinaryPredictor::threshold(0, 0.5);
  const double truth = synthetic::population_rates(law, h).raw_gap();
  const std::size_t n = 4000;
  const double radius = concentration_radius(cells, n, delta);
  const std::size_t trials = 300;
  const auto misses = parallel_trials(trials, 77, [&](std::size_t, std::uint64_t seed) {
    const auto data = law.sample(n, seed);
    return std::abs(discrimination_gap(empirical_rates(data, h)) - truth) > radius ? 1.0 : 0.0;
  });
  double total = 0;
  for (double m : misses) total += m;
  EXPECT_LE(total / trials, delta);
}

TEST(Band, IndeterminateBetweenRadii) {
  std::vector<LabeledSample> rows;
  std::vector<double> preds;
  // 1000 rows per cell keeps the radius small; rates differ by 0.5 in y=1.
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      for (int i = 0; i < 1000; ++i) {
        rows.push_back({{0.0}, a, y});
        preds.push_back(y == 1 && a == 1 ? (i < 500 ? 1.0 : 0.0) : (y == 1 ? 1.0 : 0.0));
      }
    }
  }
  const Dataset data(rows);
  const auto r = detect(data, preds, 0.9, 0.1);
  EXPECT_NEAR(r.gap, 0.5, 1e-15);
  EXPECT_LT(r.radius, 0.4);
  EXPECT_EQ(r.band, Band::kIndeterminate);
}

}  // namespace
}  // namespace eqodds::audit
