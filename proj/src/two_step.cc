#include "eqodds/two_step.h"

#include <cmath>

#include "eqodds/audit.h"
#include "eqodds/errors.h"

namespace eqodds::two_step {

namespace {

void require_all_cells(const Dataset& data, const std::string& context) {
  const auto n = data.cell_counts();
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a)
      if (n[y][a] == 0) throw EmptyCellError(y, a, context);
}

}  // namespace

double Schedule::evaluate(std::int64_t n, const CellProbabilities& cells, double delta) const {
  if (!(delta > 0.0 && delta < 0.5)) throw InvalidParameterError("delta must lie in (0, 1/2)");
  const double pmin = cells.min();
  switch (kind) {
    case Kind::kFixed:
      if (!(value >= 0.0)) throw InvalidParameterError("fixed tolerance must be nonnegative");
      return value;
    case Kind::kLemma4:
      if (!(pmin > 0.0)) throw InvalidParameterError("schedule needs every cell populated");
      return 2.0 * std::sqrt(2.0 * std::log(64.0 / delta) / (static_cast<double>(n) * pmin));
    case Kind::kRate:
      if (!(pmin > 0.0)) throw InvalidParameterError("schedule needs every cell populated");
      if (!(value > 0.0)) throw InvalidParameterError("rate factor must be positive");
      return value * std::sqrt(std::log(1.0 / delta) / (static_cast<double>(n) * pmin));
  }
  throw InvalidParameterError("unknown schedule");
}

Step1Result step1_constrained_erm(const Dataset& s1, const FiniteHypothesisClass& hypotheses,
                                  double alpha_n) {
  require_all_cells(s1, "step 1 sample");
  std::optional<Step1Result> best;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto preds = predict(s1, hypotheses[i]);
    const double gap = audit::discrimination_gap(empirical_rates(s1, preds));
    if (!(gap < alpha_n)) continue;
    const double loss = empirical_loss_01(s1, preds);
    if (!best || loss < best->empirical_loss) {
      best = Step1Result{hypotheses[i], i, loss, gap, false};
    }
  }
  if (best) return *best;

  const auto zero = BinaryPredictor::constant(0);
  const auto one = BinaryPredictor::constant(1);
  const double l0 = empirical_loss_01(s1, zero);
  const double l1 = empirical_loss_01(s1, one);
  return Step1Result{l1 < l0 ? one : zero, std::nullopt, std::min(l0, l1), 0.0, true};
}

posthoc::DerivedPredictor step2_correct(const Dataset& s2, const BinaryPredictor& step1_predictor,
                                        double alpha_tilde_n) {
  require_all_cells(s2, "step 2 sample");
  const auto rates = empirical_rates(s2, step1_predictor);
  const auto stats = posthoc::RateStatistics::from_rates(rates, CellProbabilities::empirical(s2));
  return posthoc::optimal_derived(stats, std::min(alpha_tilde_n, 1.0));
}

TwoStepResult train_two_step(const Dataset& data, const FiniteHypothesisClass& hypotheses,
                             const TwoStepConfig& config,
                             const std::optional<PopulationOracle>& oracle) {
  if (data.size() < 8) throw TooFewSamplesError("two-step training needs at least 8 samples");
  auto [s1, s2] = split_dataset(data, config.seed);
  require_all_cells(s1, "split S1");
  require_all_cells(s2, "split S2");

  TwoStepResult out;
  const auto n = static_cast<std::int64_t>(data.size());
  const auto cells = CellProbabilities::empirical(data);
  out.alpha_n = config.alpha_n.evaluate(n, cells, config.delta);
  out.alpha_tilde_n = config.alpha_tilde_n.evaluate(n, cells, config.delta);

  out.step1 = step1_constrained_erm(s1, hypotheses, out.alpha_n);
  out.step2 = step2_correct(s2, out.step1.predictor, out.alpha_tilde_n);

  const auto corrected = out.step2.apply(out.step1.predictor);
  auto fill = [&](const Dataset& part, SplitDiagnostics& d) {
    d.n = part.size();
    const auto base = predict(part, out.step1.predictor);
    d.step1_loss = empirical_loss_01(part, base);
    d.step1_gap = audit::discrimination_gap(empirical_rates(part, base));
    const auto fixed = predict(part, corrected);
    d.corrected_loss = empirical_loss_01(part, fixed);
    d.corrected_gap = audit::discrimination_gap(empirical_rates(part, fixed));
  };
  fill(s1, out.s1);
  fill(s2, out.s2);

  if (oracle) {
    const GroupRates base = oracle->rates(out.step1.predictor);
    const posthoc::RateStatistics stats{base.gamma, oracle->cells};
    SplitDiagnostics pop;
    pop.step1_loss = posthoc::loss_from_rates(base.gamma, oracle->cells);
    pop.step1_gap = base.raw_gap();
    const auto induced = posthoc::induced_rates(out.step2, stats);
    pop.corrected_loss = posthoc::loss_from_rates(induced.gamma, oracle->cells);
    pop.corrected_gap = induced.raw_gap();
    out.population = pop;
  }
  return out;
}

}  // namespace eqodds::two_step
