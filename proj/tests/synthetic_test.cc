#include <gtest/gtest.h>

#include <cmath>

#include "eqodds/audit.h"
#include "eqodds/errors.h"
#include "eqodds/synthetic.h"

namespace eqodds::synthetic {
namespace {

// P(x, a, y) for D_eps written out from its definition.
double d_eps_prob(double eps, int x, int a, int y) {
  const double pa = a == y ? 1 - eps : eps;
  const double px = x == y ? 1 - 2 * eps : 2 * eps;
  return 0.5 * pa * px;
}

double d_eps_squared_loss(double eps, const Linear3& f) {
  double total = 0;
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 2; ++a)
      for (int y = 0; y < 2; ++y) {
        const double r = f.w1 * x + f.w2 * a + f.b - y;
        total += d_eps_prob(eps, x, a, y) * r * r;
      }
  return total;
}

TEST(DEpsilon, AtomsMatchDefinition) {
  for (double eps : {0.05, 0.1, 0.2}) {
    const auto law = d_epsilon(eps);
    EXPECT_EQ(law.atoms().size(), 8u);
    for (const auto& atom : law.atoms()) {
      EXPECT_NEAR(atom.prob, d_eps_prob(eps, static_cast<int>(atom.x[0]), atom.a, atom.y), 1e-15);
    }
    const auto cells = law.cell_probabilities();
    EXPECT_NEAR(cells(1, 1), 0.5 * (1 - eps), 1e-15);
    EXPECT_NEAR(cells(1, 0), 0.5 * eps, 1e-15);
    EXPECT_NEAR(cells.min(), 0.5 * eps, 1e-15);
  }
  EXPECT_THROW(d_epsilon(0.25), InvalidParameterError);
  EXPECT_THROW(d_epsilon(0.0), InvalidParameterError);
}

TEST(DEpsilon, FeatureRuleIsFairAndProtectedRuleIsNot) {
  const auto law = d_epsilon(0.1);
  const auto rx = population_rates(law, BinaryPredictor::threshold(0, 0.5));
  EXPECT_NEAR(rx.raw_gap(), 0.0, 1e-15);
  EXPECT_NEAR(population_loss_01(law, BinaryPredictor::threshold(0, 0.5)), 0.2, 1e-15);
  EXPECT_NEAR(population_loss_01(law, BinaryPredictor::protected_attribute()), 0.1, 1e-15);
}

TEST(FiniteLaw, Validation) {
  EXPECT_THROW(FiniteJointLaw({{{0.0}, 0, 0, 0.5}}), InvalidParameterError);
  EXPECT_THROW(FiniteJointLaw({{{0.0}, 2, 0, 1.0}}), InvalidParameterError);
  EXPECT_THROW(FiniteJointLaw({{{0.0}, 0, 0, 0.5}, {{0.0, 1.0}, 0, 1, 0.5}}), InvalidParameterError);
  EXPECT_THROW(d_epsilon(0.1).sample(0, 1), InvalidParameterError);
}

TEST(FiniteLaw, SampleFrequencies) {
  const auto law = d_epsilon(0.15);
  const std::size_t n = 200000;
  const auto data = law.sample(n, 12);
  const auto counts = data.cell_counts();
  const auto cells = law.cell_probabilities();
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a) {
      const double p = cells(y, a);
      EXPECT_NEAR(static_cast<double>(counts[y][a]) / n, p, 5 * std::sqrt(p * (1 - p) / n));
    }
  // Deterministic in the seed.
  const auto again = law.sample(100, 12);
  const auto first = law.sample(100, 12);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(again[i].x, first[i].x);
}

TEST(Losses, HingeAndSquaredWithCodings) {
  const auto law = d_epsilon(0.1);
  // f = 0 gives hinge 1 and squared E[Y^2].
  const RealRule zero = [](std::span<const double>, double) { return 0.0; };
  EXPECT_NEAR(population_loss_hinge(law, zero), 1.0, 1e-15);
  EXPECT_NEAR(population_loss_squared(law, zero), 0.5, 1e-15);
  EXPECT_NEAR(population_loss_squared(law.with_coding(Coding::kPlusMinusOne), zero), 1.0, 1e-15);
  // f = 2a - 1 under +-1 coding errs only when a != y.
  const auto pm = law.with_coding(Coding::kPlusMinusOne);
  const RealRule by_a = [](std::span<const double>, double a) { return a; };
  EXPECT_NEAR(population_loss_hinge(pm, by_a), 2.0 * 0.1, 1e-15);
}

TEST(LowerBoundFamily, RatesAndIndependence) {
  const double alpha = 0.1;
  const auto inst = theorem4_family(5, alpha);
  EXPECT_EQ(inst.hypotheses.size(), 5u);
  EXPECT_EQ(inst.min_cell, (Cell{1, 1}));
  const auto& law = inst.law;
  const auto finite = law.to_finite_law();
  for (std::size_t j = 0; j < law.dim(); ++j) {
    const auto exact = population_rates(finite, inst.hypotheses[j]);
    const auto fast = law.coordinate_rates(j);
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a) EXPECT_NEAR(exact.gamma[y][a], fast.gamma[y][a], 1e-12);
    EXPECT_NEAR(population_loss_01(finite, inst.hypotheses[j]), law.coordinate_loss(j), 1e-12);
  }
  // h_1 is fair with loss alpha; the others have gap alpha and loss alpha / 4.
  EXPECT_NEAR(law.coordinate_rates(0).raw_gap(), 0.0, 1e-12);
  EXPECT_NEAR(law.coordinate_loss(0), alpha, 1e-12);
  for (std::size_t j = 1; j < law.dim(); ++j) {
    EXPECT_NEAR(law.coordinate_rates(j).raw_gap(), alpha, 1e-12);
    EXPECT_NEAR(law.coordinate_loss(j), 0.25 * alpha, 1e-12);
  }
  // Coordinates 1 and 2 are independent given (Y, A) = (1, 1).
  double joint = 0, m1 = 0, m2 = 0, mass = 0;
  for (const auto& atom : finite.atoms()) {
    if (atom.y != 1 || atom.a != 1) continue;
    mass += atom.prob;
    joint += atom.prob * atom.x[1] * atom.x[2];
    m1 += atom.prob * atom.x[1];
    m2 += atom.prob * atom.x[2];
  }
  EXPECT_NEAR(joint / mass, (m1 / mass) * (m2 / mass), 1e-12);
}

TEST(LowerBoundFamily, MinCellAndAlpha) {
  const CellProbabilities cells({{{0.3, 0.3}, {0.15, 0.25}}});
  EXPECT_EQ(theorem4_family(3, 0.1, cells).min_cell, (Cell{1, 0}));
  EXPECT_NEAR(theorem4_alpha(64, 200, 0.25), 3 * std::log(63.0 / 5.0) / (4 * 200 * 0.25), 1e-15);
  EXPECT_THROW(theorem4_alpha(6, 200, 0.25), InvalidParameterError);
  EXPECT_THROW(theorem4_family(1, 0.1), InvalidParameterError);
  EXPECT_THROW(theorem4_family(3, 0.6), InvalidParameterError);
}

TEST(LowerBoundFamily, SampleMatchesRates) {
  const auto inst = theorem4_family(4, 0.2);
  const auto data = inst.law.sample(100000, 3);
  const auto emp = empirical_rates(data, inst.hypotheses[2]);
  const auto pop = inst.law.coordinate_rates(2);
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(emp.gamma[y][a], pop.gamma[y][a], 0.02);
}

TEST(Gaussian, DeterministicAndSpectrum) {
  GaussianSpec spec;
  spec.d = 4;
  spec.seed = 17;
  const auto a = gaussian_law(spec);
  const auto b = gaussian_law(spec);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.cov, b.cov);
  EXPECT_EQ(a.cov.rows(), 6);
  EXPECT_LE((a.cov - a.cov.transpose()).norm(), 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.cov);
  EXPECT_GE(eig.eigenvalues().minCoeff(), 0.5 - 1e-12);
  EXPECT_LE(eig.eigenvalues().maxCoeff(), 2.0 + 1e-12);

  spec.eigen_min = spec.eigen_max = 0.7;
  const auto flat = gaussian_law(spec);
  EXPECT_EQ(flat.cov, Eigen::MatrixXd::Identity(6, 6) * 0.7);
}

TEST(Gaussian, SampleMomentsConverge) {
  GaussianSpec spec;
  spec.d = 2;
  spec.seed = 5;
  const auto law = gaussian_law(spec);
  const auto data = law.sample(200000, 8);
  const auto est = second_moment::estimate_moments(data);
  EXPECT_LE((est.mean() - law.mean).cwiseAbs().maxCoeff(), 0.02);
  EXPECT_LE((est.cov() - law.cov).cwiseAbs().maxCoeff(), 0.03);
}

TEST(SquaredLossExample, ValuesAgainstDirectEnumeration) {
  for (double eps : {0.1, 0.15, 0.2}) {
    const auto rep = example2_solutions(eps);
    ASSERT_TRUE(rep.l1_ball.has_value());
    const auto& c = *rep.l1_ball;
    EXPECT_NEAR(c.fair_loss, d_eps_squared_loss(eps, c.fair_on_x), 1e-15);
    EXPECT_NEAR(c.fair_loss, c.fair_loss_formula, 1e-12);
    EXPECT_LE(c.fair_loss, c.fair_loss_bound);
    EXPECT_NEAR(c.bayes_loss, d_eps_squared_loss(eps, c.bayes), 1e-15);
    EXPECT_LT(c.bayes_loss, c.fair_loss);
    EXPECT_TRUE(c.fair_is_nondiscriminatory);
    EXPECT_TRUE(c.certificate.certified);
    EXPECT_NEAR(c.corrected_constant, 0.5, 1e-15);
    EXPECT_NEAR(c.corrected_loss, 0.25, 1e-15);
    EXPECT_GT(c.corrected_loss, c.fair_loss);

    const auto& s = rep.one_sparse;
    EXPECT_NEAR(s.fair_loss, s.fair_loss_formula, 1e-12);
    EXPECT_TRUE(s.certificate.certified);
    EXPECT_EQ(s.bayes.w1, 0.0);
    EXPECT_NEAR(s.bayes_loss, d_eps_squared_loss(eps, s.bayes), 1e-15);
    EXPECT_NEAR(s.corrected_loss, 0.25, 1e-15);
  }
  EXPECT_FALSE(example2_solutions(0.05).l1_ball.has_value());
  EXPECT_THROW(example2_solutions(0.3), InvalidParameterError);
}

TEST(SquaredLossExample, GradientAtL1Optimum) {
  const auto c = *example2_solutions(0.1).l1_ball;
  EXPECT_NEAR(c.certificate.grad_w1, -0.228, 1e-12);
  EXPECT_NEAR(c.certificate.grad_w2, -0.25, 1e-12);
  EXPECT_NEAR(c.certificate.grad_b, 0.0, 1e-12);
  EXPECT_NEAR(c.certificate.lambda, 0.25, 1e-12);
}

}  // namespace
}  // namespace eqodds::synthetic
