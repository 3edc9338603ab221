#include "eqodds/audit.h"

#include <cmath>

#include "eqodds/errors.h"

namespace eqodds::audit {

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw InvalidParameterError("delta must lie in (0, 1/2)");
}

double max_inverse_sqrt(const CellProbabilities& cells, double numerator, std::int64_t n) {
  const double pmin = cells.min();
  if (!(pmin > 0.0)) throw InvalidParameterError("all cell probabilities must be positive");
  // max over cells is attained at the smallest cell.
  return std::sqrt(numerator / (static_cast<double>(n) * pmin));
}

}  // namespace

std::string_view to_string(Decision d) { return d == Decision::kFlag ? "flag" : "pass"; }

std::string_view to_string(Band b) {
  switch (b) {
    case Band::kZeroConsistent:
      return "zero-consistent";
    case Band::kAlphaConsistent:
      return "alpha-consistent";
    case Band::kIndeterminate:
      break;
  }
  return "indeterminate";
}

double discrimination_gap(const GroupRates& rates) {
  for (const Cell& c : rates.empty_cells()) throw EmptyCellError(c.y, c.a, "discrimination gap");
  return rates.raw_gap();
}

std::int64_t required_sample_size(double alpha, double delta, const CellProbabilities& cells) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameterError("alpha must lie in (0, 1)");
  check_delta(delta);
  const double pmin = cells.min();
  if (!(pmin > 0.0)) throw InvalidParameterError("all cell probabilities must be positive");
  return static_cast<std::int64_t>(std::ceil(16.0 * std::log(32.0 / delta) / (alpha * alpha * pmin)));
}

double detection_radius(const CellProbabilities& cells, std::int64_t n, double delta) {
  check_delta(delta);
  return 2.0 * max_inverse_sqrt(cells, std::log(32.0 / delta), n);
}

AuditReport detect(const Dataset& data, std::span<const double> predictions, double alpha,
                   double delta, std::optional<CellProbabilities> cells) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameterError("alpha must lie in (0, 1)");
  check_delta(delta);

  AuditReport r;
  r.alpha = alpha;
  r.delta = delta;
  r.rates = empirical_rates(data, predictions);
  r.gap = discrimination_gap(r.rates);
  r.threshold = alpha / 2.0;
  r.decision = r.gap > r.threshold ? Decision::kFlag : Decision::kPass;
  r.n = static_cast<std::int64_t>(data.size());
  r.cell_probabilities_supplied = cells.has_value();
  r.cell_probabilities_used = cells ? *cells : CellProbabilities::empirical(data);
  r.n_required = required_sample_size(alpha, delta, r.cell_probabilities_used);
  r.certified = r.n >= r.n_required;
  r.radius = detection_radius(r.cell_probabilities_used, r.n, delta);
  if (r.gap <= r.radius) {
    r.band = Band::kZeroConsistent;
  } else if (r.gap >= alpha - r.radius) {
    r.band = Band::kAlphaConsistent;
  } else {
    r.band = Band::kIndeterminate;
  }
  return r;
}

AuditReport detect(const Dataset& data, const BinaryPredictor& predictor, double alpha,
                   double delta, std::optional<CellProbabilities> cells) {
  const auto p = predict(data, predictor);
  return detect(data, p, alpha, delta, cells);
}

std::int64_t concentration_min_n(const CellProbabilities& cells, double delta) {
  check_delta(delta);
  const double pmin = cells.min();
  if (!(pmin > 0.0)) throw InvalidParameterError("all cell probabilities must be positive");
  return static_cast<std::int64_t>(std::floor(8.0 * std::log(8.0 / delta) / pmin)) + 1;
}

double concentration_radius(const CellProbabilities& cells, std::int64_t n, double delta) {
  const std::int64_t min_n = concentration_min_n(cells, delta);
  if (n < min_n) throw PreconditionUnmetError("concentration bound precondition", min_n);
  return 2.0 * max_inverse_sqrt(cells, std::log(16.0 / delta), n);
}

}  // namespace eqodds::audit
