#pragma once

// Derived randomized predictors: the loss-minimizing post hoc correction
// (a 4-variable linear program solved by exact vertex enumeration) and the
// conservative 0-discriminatory construction used to bound its loss.

#include <array>

#include "eqodds/core.h"

namespace eqodds::posthoc {

// Base predictor statistics: gamma[y][a] of h and the cell probabilities.
struct RateStatistics {
  CellTable<double> gamma{};
  CellProbabilities cells;

  // Throws InvalidParameterError unless every gamma lies in [0,1].
  void validate() const;
  // Sample statistics; throws EmptyCellError if rates has an empty cell.
  static RateStatistics from_rates(const GroupRates& rates, const CellProbabilities& cells);
};

// mix[yhat][a] = P(Ytilde = 1 | Yhat = yhat, A = a).
struct DerivedPredictor {
  CellTable<double> mix{};
  // Set by the conservative construction: the base rule was
  // worse than chance in every group (rates read through its complement), or
  // no orientation applied and a constant was used.
  bool base_flipped = false;
  bool constant_fallback = false;

  static DerivedPredictor identity();
  static DerivedPredictor constant(double q);

  // P(Ytilde = 1) given P(Yhat = 1) = base and group a.
  double accept_probability(double base, int a) const {
    return mix[1][a] * base + mix[0][a] * (1.0 - base);
  }
  // Wraps a base predictor into the randomized rule it induces.
  BinaryPredictor apply(const BinaryPredictor& base) const;
};

// gamma_ya(Ytilde) = mix[1][a] gamma_ya(h) + mix[0][a] (1 - gamma_ya(h)).
GroupRates induced_rates(const DerivedPredictor& p, const RateStatistics& stats);

// sum_a P_0a gamma_0a(Ytilde) + sum_a P_1a (1 - gamma_1a(Ytilde)).
double derived_loss(const DerivedPredictor& p, const RateStatistics& stats);
double loss_from_rates(const CellTable<double>& gamma, const CellProbabilities& cells);

// Minimizes derived_loss subject to |gamma_y0 - gamma_y1| <= tolerance for
// both y over mix in [0,1]^4. Among optimal vertices the lexicographically
// smallest (mix00, mix01, mix10, mix11) is returned.
DerivedPredictor optimal_derived(const RateStatistics& stats, double tolerance);

// 0-discriminatory predictor giving both groups the worse of the two false
// positive rates and the worse of the two true positive rates:
// (max_a gamma_0a, min_a gamma_1a) when min_a gamma_1a >= max_a gamma_0a.
// For a base rule that is worse than chance everywhere (min_a gamma_0a >=
// max_a gamma_1a) the same construction on the complement gives
// (min_a gamma_0a, max_a gamma_1a). Otherwise the better constant is used.
DerivedPredictor conservative_correction(const RateStatistics& stats);

}  // namespace eqodds::posthoc
