#pragma once

// Two-step learner: constrained ERM over a finite class on one half of the
// data, then a sample-based derived correction on the other half.

#include <cstdint>
#include <functional>
#include <optional>

#include "eqodds/core.h"
#include "eqodds/posthoc.h"

namespace eqodds::two_step {

// Tolerance schedule for either step.
struct Schedule {
  enum class Kind {
    kFixed,   // value is the tolerance itself
    kLemma4,  // 2 max_ya sqrt(2 log(64/delta) / (n Phat_ya))
    kRate,    // value * max_ya sqrt(log(1/delta) / (n Phat_ya))
  };
  Kind kind = Kind::kLemma4;
  double value = 0.0;

  static Schedule fixed(double v) { return {Kind::kFixed, v}; }
  static Schedule lemma4() { return {Kind::kLemma4, 0.0}; }
  static Schedule rate(double factor) { return {Kind::kRate, factor}; }

  // n is the full training-set size; cells the empirical cell frequencies.
  double evaluate(std::int64_t n, const CellProbabilities& cells, double delta) const;
};

struct TwoStepConfig {
  double delta = 0.1;
  Schedule alpha_n = Schedule::lemma4();
  Schedule alpha_tilde_n = Schedule::lemma4();
  std::uint64_t seed = 0;
};

struct Step1Result {
  BinaryPredictor predictor = BinaryPredictor::constant(0);
  // Index into the class; unset when the constant fallback was taken.
  std::optional<std::size_t> index;
  double empirical_loss = 0.0;
  double empirical_gap = 0.0;
  bool constraint_forced_constant = false;
};

// Exact population statistics of a base predictor, used for diagnostics.
struct PopulationOracle {
  std::function<GroupRates(const BinaryPredictor&)> rates;
  CellProbabilities cells;
};

struct SplitDiagnostics {
  std::size_t n = 0;
  double step1_loss = 0.0;
  double step1_gap = 0.0;
  double corrected_loss = 0.0;
  double corrected_gap = 0.0;
};

struct TwoStepResult {
  Step1Result step1;
  posthoc::DerivedPredictor step2;
  double alpha_n = 0.0;
  double alpha_tilde_n = 0.0;
  SplitDiagnostics s1;
  SplitDiagnostics s2;
  std::optional<SplitDiagnostics> population;  // n unused
};

// argmin of empirical 0-1 loss over the class subject to Gamma^S1(h) < alpha_n;
// ties go to the earlier hypothesis. With no feasible hypothesis, returns the
// better constant rule and sets constraint_forced_constant. Throws
// EmptyCellError if s1 misses a (y, a) cell.
Step1Result step1_constrained_erm(const Dataset& s1, const FiniteHypothesisClass& hypotheses,
                                  double alpha_n);

// Optimal derived predictor on the empirical statistics of the step-1 rule over s2.
posthoc::DerivedPredictor step2_correct(const Dataset& s2, const BinaryPredictor& step1_predictor,
                                        double alpha_tilde_n);

// Split, step 1, step 2, diagnostics. Throws TooFewSamplesError below 8
// samples and EmptyCellError naming the split whose cell is empty.
TwoStepResult train_two_step(const Dataset& data, const FiniteHypothesisClass& hypotheses,
                             const TwoStepConfig& config,
                             const std::optional<PopulationOracle>& oracle = std::nullopt);

}  // namespace eqodds::two_step
