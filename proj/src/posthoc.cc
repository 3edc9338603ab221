#include "eqodds/posthoc.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "eqodds/errors.h"

namespace eqodds::posthoc {

namespace {

constexpr double kFeasTol = 1e-12;
constexpr double kTieTol = 1e-12;

// Variable order: (mix00, mix01, mix10, mix11), i.e. index = 2*yhat + a.
using Vec4 = Eigen::Vector4d;

struct HalfSpace {
  Vec4 normal;
  double bound;
};

bool lex_less(const Vec4& u, const Vec4& v) {
  for (int k = 0; k < 4; ++k) {
    if (u[k] < v[k] - kTieTol) return true;
    if (u[k] > v[k] + kTieTol) return false;
  }
  return false;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

void RateStatistics::validate() const {
  for (const auto& row : gamma)
    for (double g : row)
      if (!(g >= 0.0 && g <= 1.0)) throw InvalidParameterError("base rates must lie in [0,1]");
}

RateStatistics RateStatistics::from_rates(const GroupRates& rates, const CellProbabilities& cells) {
  for (const Cell& c : rates.empty_cells()) throw EmptyCellError(c.y, c.a, "rate statistics");
  RateStatistics s{rates.gamma, cells};
  s.validate();
  return s;
}

DerivedPredictor DerivedPredictor::identity() {
  DerivedPredictor p;
  p.mix = {{{0.0, 0.0}, {1.0, 1.0}}};
  return p;
}

DerivedPredictor DerivedPredictor::constant(double q) {
  DerivedPredictor p;
  p.mix = {{{q, q}, {q, q}}};
  return p;
}

BinaryPredictor DerivedPredictor::apply(const BinaryPredictor& base) const {
  std::ostringstream name;
  name << "derived[" << mix[0][0] << "," << mix[0][1] << "," << mix[1][0] << "," << mix[1][1]
       << "](" << base.name() << ")";
  return BinaryPredictor(
      name.str(),
      [self = *this, base](std::span<const double> x, int a) {
        return clamp01(self.accept_probability(base(x, a), a));
      },
      true);
}

GroupRates induced_rates(const DerivedPredictor& p, const RateStatistics& stats) {
  GroupRates r;
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      r.gamma[y][a] = p.accept_probability(stats.gamma[y][a], a);
      r.present[y][a] = true;
    }
  }
  return r;
}

double loss_from_rates(const CellTable<double>& gamma, const CellProbabilities& cells) {
  double loss = 0.0;
  for (int a = 0; a < 2; ++a) {
    loss += cells(0, a) * gamma[0][a] + cells(1, a) * (1.0 - gamma[1][a]);
  }
  return loss;
}

double derived_loss(const DerivedPredictor& p, const RateStatistics& stats) {
  return loss_from_rates(induced_rates(p, stats).gamma, stats.cells);
}

DerivedPredictor optimal_derived(const RateStatistics& stats, double tolerance) {
  stats.validate();
  if (!(tolerance >= 0.0 && tolerance <= 1.0)) {
    throw InvalidParameterError("tolerance must lie in [0,1]");
  }
  const auto& g = stats.gamma;

  // Objective (up to the constant sum_a P_1a) is linear in the mixing vector.
  Vec4 cost;
  for (int a = 0; a < 2; ++a) {
    cost[a] = stats.cells(0, a) * (1.0 - g[0][a]) - stats.cells(1, a) * (1.0 - g[1][a]);
    cost[2 + a] = stats.cells(0, a) * g[0][a] - stats.cells(1, a) * g[1][a];
  }

  std::vector<HalfSpace> cons;
  cons.reserve(12);
  for (int k = 0; k < 4; ++k) {
    Vec4 e = Vec4::Zero();
    e[k] = 1.0;
    cons.push_back({e, 1.0});
    cons.push_back({-e, 0.0});
  }
  for (int y = 0; y < 2; ++y) {
    // gamma_y0 - gamma_y1 as a linear form in the mixing vector.
    Vec4 r(1.0 - g[y][0], -(1.0 - g[y][1]), g[y][0], -g[y][1]);
    cons.push_back({r, tolerance});
    cons.push_back({-r, tolerance});
  }

  bool found = false;
  Vec4 best = Vec4::Zero();
  double best_obj = 0.0;
  const int m = static_cast<int>(cons.size());
  Eigen::Matrix4d lhs;
  Vec4 rhs;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      for (int k = j + 1; k < m; ++k) {
        for (int l = k + 1; l < m; ++l) {
          const int idx[4] = {i, j, k, l};
          for (int r = 0; r < 4; ++r) {
            lhs.row(r) = cons[idx[r]].normal.transpose();
            rhs[r] = cons[idx[r]].bound;
          }
          Eigen::FullPivLU<Eigen::Matrix4d> lu(lhs);
          lu.setThreshold(1e-12);
          if (lu.rank() < 4) continue;
          Vec4 v = lu.solve(rhs);
          bool feasible = true;
          for (const auto& h : cons) {
            if (h.normal.dot(v) > h.bound + kFeasTol) {
              feasible = false;
              break;
            }
          }
          if (!feasible) continue;
          for (int q = 0; q < 4; ++q) v[q] = clamp01(v[q]);
          const double obj = cost.dot(v);
          if (!found || obj < best_obj - kTieTol ||
              (std::abs(obj - best_obj) <= kTieTol && lex_less(v, best))) {
            found = true;
            best = v;
            best_obj = obj;
          }
        }
      }
    }
  }
  // The box corners p = 0 and p = 1 are always feasible vertices.
  DerivedPredictor out;
  out.mix = {{{best[0], best[1]}, {best[2], best[3]}}};
  return out;
}

DerivedPredictor conservative_correction(const RateStatistics& stats) {
  stats.validate();
  const auto& g = stats.gamma;
  const double max_fp = std::max(g[0][0], g[0][1]);
  const double min_fp = std::min(g[0][0], g[0][1]);
  const double max_tp = std::max(g[1][0], g[1][1]);
  const double min_tp = std::min(g[1][0], g[1][1]);

  DerivedPredictor out;
  double target_fp, target_tp;
  if (min_tp >= max_fp) {
    target_fp = max_fp;
    target_tp = min_tp;
  } else if (min_fp >= max_tp) {
    target_fp = min_fp;
    target_tp = max_tp;
    out.base_flipped = true;
  } else {
    const double p_y1 = stats.cells.label_marginal(1);
    const double p_y0 = stats.cells.label_marginal(0);
    DerivedPredictor c = DerivedPredictor::constant(p_y1 > p_y0 ? 1.0 : 0.0);
    c.constant_fallback = true;
    return c;
  }

  for (int a = 0; a < 2; ++a) {
    const double g0 = g[0][a];
    const double g1 = g[1][a];
    const double det = g0 - g1;
    if (std::abs(det) < 1e-15) {
      // Base point on the diagonal; the target then coincides with it.
      out.mix[1][a] = 1.0;
      out.mix[0][a] = 0.0;
      continue;
    }
    // mix1 * g0 + mix0 * (1 - g0) = target_fp
    // mix1 * g1 + mix0 * (1 - g1) = target_tp
    const double mix1 = (target_fp * (1.0 - g1) - target_tp * (1.0 - g0)) / det;
    const double mix0 = (g0 * target_tp - g1 * target_fp) / det;
    out.mix[1][a] = clamp01(mix1);
    out.mix[0][a] = clamp01(mix0);
  }
  return out;
}

}  // namespace eqodds::posthoc
