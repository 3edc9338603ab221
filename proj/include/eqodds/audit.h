#pragma once

// Discrimination quantification and the finite-sample detection test.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "eqodds/core.h"

namespace eqodds::audit {

enum class Decision { kPass, kFlag };

// Where the sample gap sits relative to the concentration radius r of the
// detection test: at most r is consistent with a 0-discriminatory rule, at
// least alpha - r with an alpha-discriminatory one, anything between says the
// population gap lies strictly inside (0, alpha).
enum class Band { kZeroConsistent, kIndeterminate, kAlphaConsistent };

std::string_view to_string(Decision d);
std::string_view to_string(Band b);

struct AuditReport {
  GroupRates rates;
  double gap = 0.0;        // Gamma on the audited sample
  double threshold = 0.0;  // alpha / 2
  double alpha = 0.0;
  double delta = 0.0;
  Decision decision = Decision::kPass;
  std::int64_t n = 0;
  std::int64_t n_required = 0;
  bool certified = false;  // n >= n_required
  double radius = 0.0;     // 2 max_ya sqrt(log(32/delta) / (n P_ya))
  Band band = Band::kIndeterminate;
  CellProbabilities cell_probabilities_used;
  bool cell_probabilities_supplied = false;
};

// max_y |gamma[y][0] - gamma[y][1]|. Throws EmptyCellError on an empty cell.
double discrimination_gap(const GroupRates& rates);

// ceil(16 log(32/delta) / (alpha^2 min_ya P_ya)).
std::int64_t required_sample_size(double alpha, double delta, const CellProbabilities& cells);

// Half-width used by the detection test proof: 2 max_ya sqrt(log(32/delta)/(n P_ya)).
double detection_radius(const CellProbabilities& cells, std::int64_t n, double delta);

// T(Yhat, S, alpha/2) = 1(Gamma^S > alpha/2). Cell probabilities default to
// the empirical frequencies of the sample. Throws InvalidParameterError for
// alpha outside (0,1) or delta outside (0,1/2), EmptyCellError on empty cells.
AuditReport detect(const Dataset& data, std::span<const double> predictions, double alpha,
                   double delta, std::optional<CellProbabilities> cells = std::nullopt);
AuditReport detect(const Dataset& data, const BinaryPredictor& predictor, double alpha,
                   double delta, std::optional<CellProbabilities> cells = std::nullopt);

// Smallest n with n > 8 log(8/delta) / min_ya P_ya.
std::int64_t concentration_min_n(const CellProbabilities& cells, double delta);

// 2 max_ya sqrt(log(16/delta) / (n P_ya)): with probability at least 1 - delta,
// |Gamma - Gamma^S| is no larger. Throws PreconditionUnmetError (carrying the
// minimal n) below concentration_min_n.
double concentration_radius(const CellProbabilities& cells, std::int64_t n, double delta);

}  // namespace eqodds::audit
