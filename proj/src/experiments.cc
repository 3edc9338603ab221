#include "eqodds/experiments.h"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "eqodds/audit.h"
#include "eqodds/errors.h"
#include "eqodds/posthoc.h"
#include "eqodds/random.h"
#include "eqodds/second_moment.h"
#include "eqodds/synthetic.h"
#include "eqodds/two_step.h"

namespace eqodds::experiments {

namespace {

using nlohmann::json;
namespace sm = second_moment;

std::string to_string(Comparison c) {
  switch (c) {
    case Comparison::kAbs:
      return "abs";
    case Comparison::kAtMost:
      return "at-most";
    case Comparison::kAtLeast:
      return "at-least";
    case Comparison::kInRange:
      return "in-range";
  }
  return "abs";
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double in_range(double v, double lo, double hi, const std::string& what) {
  if (!(v > lo && v < hi)) {
    std::ostringstream msg;
    msg << what << " must lie in (" << lo << ", " << hi << ")";
    throw ConfigError(msg.str());
  }
  return v;
}

// Randomized rule Ytilde => real score 2 P(Ytilde = 1) - 1 over coded inputs.
synthetic::RealRule plus_minus_score(const BinaryPredictor& p) {
  return [p](std::span<const double> xc, double ac) {
    std::vector<double> x(xc.size());
    for (std::size_t j = 0; j < xc.size(); ++j) x[j] = (xc[j] + 1.0) / 2.0;
    return 2.0 * p(x, static_cast<int>((ac + 1.0) / 2.0)) - 1.0;
  };
}

ExperimentReport example1(const ExperimentConfig& cfg) {
  const double eps = in_range(cfg.epsilon.value_or(0.1), 0.0, 0.25, "epsilon");
  ExperimentReport r;
  r.parameters = {{"epsilon", eps}};
  const auto law = synthetic::d_epsilon(eps);
  const auto cells = law.cell_probabilities();

  const auto y_star = BinaryPredictor::threshold(0, 0.5);
  r.rows.push_back(make_row("AC1.y-star-loss", "0-1 loss of Y*=X", 2 * eps,
                            synthetic::population_loss_01(law, y_star), 1e-12));
  r.rows.push_back(make_row("AC1.y-star-gap", "Gamma of Y*=X", 0.0,
                            synthetic::population_rates(law, y_star).raw_gap(), 1e-12));

  // Bayes 0-1 rule: best of the 16 deterministic rules on (x, a).
  double best_loss = 2.0;
  int best_bits = 0;
  for (int bits = 0; bits < 16; ++bits) {
    const BinaryPredictor h("table" + std::to_string(bits), [bits](std::span<const double> x, int a) {
      return double((bits >> (2 * static_cast<int>(x[0]) + a)) & 1);
    });
    const double loss = synthetic::population_loss_01(law, h);
    if (loss < best_loss - 1e-15) {
      best_loss = loss;
      best_bits = bits;
    }
  }
  const int a_bits = 0b1010;  // 1 exactly where a = 1
  r.rows.push_back(make_row("AC1.bayes-is-a", "Bayes 0-1 rule equals A (1 = yes)", 1.0,
                            best_bits == a_bits ? 1.0 : 0.0, 0.0));
  const auto bayes = BinaryPredictor::protected_attribute();
  r.rows.push_back(
      make_row("AC1.bayes-loss", "0-1 loss of A", eps, synthetic::population_loss_01(law, bayes), 1e-12));
  const auto bayes_rates = synthetic::population_rates(law, bayes);
  r.rows.push_back(make_row("AC1.bayes-gap", "Gamma of A", 1.0, bayes_rates.raw_gap(), 1e-12));

  const posthoc::RateStatistics stats{bayes_rates.gamma, cells};
  const auto corrected = posthoc::optimal_derived(stats, 0.0);
  r.rows.push_back(make_row("AC1.corrected-loss", "optimal 0-discriminatory correction of A", 0.5,
                            posthoc::derived_loss(corrected, stats), 1e-12));
  r.rows.push_back(make_row("AC1.corrected-loss-oracle", "same, evaluated on the law", 0.5,
                            synthetic::population_loss_01(law, corrected.apply(bayes)), 1e-12));

  // Hinge variant on +-1 coding.
  const auto pm = law.with_coding(synthetic::Coding::kPlusMinusOne);
  r.rows.push_back(make_row("AC1.hinge-fair", "hinge loss of X (+-1)", 4 * eps,
                            synthetic::population_loss_hinge(pm, [](auto x, double) { return x[0]; }),
                            1e-12));
  // Pointwise hinge minimizer sign(2 eta - 1).
  CellTable<double> pos{}, mass{};
  for (const auto& at : law.atoms()) {
    mass[static_cast<int>(at.x[0])][at.a] += at.prob;
    pos[static_cast<int>(at.x[0])][at.a] += at.prob * at.y;
  }
  CellTable<double> f_star{};
  bool follows_a = true;
  for (int x = 0; x < 2; ++x) {
    for (int a = 0; a < 2; ++a) {
      f_star[x][a] = 2.0 * pos[x][a] / mass[x][a] > 1.0 ? 1.0 : -1.0;
      follows_a = follows_a && f_star[x][a] == 2.0 * a - 1.0;
    }
  }
  r.rows.push_back(make_row("AC1.hinge-bayes-is-a", "hinge Bayes rule equals A (1 = yes)", 1.0,
                            follows_a ? 1.0 : 0.0, 0.0));
  const BinaryPredictor hinge_sign("sign(f*)", [f_star](std::span<const double> x, int a) {
    return f_star[static_cast<int>(x[0])][a] >= 0.0 ? 1.0 : 0.0;
  });
  const posthoc::RateStatistics hstats{synthetic::population_rates(law, hinge_sign).gamma, cells};
  const auto hinge_corrected = posthoc::optimal_derived(hstats, 0.0).apply(hinge_sign);
  r.rows.push_back(make_row("AC1.hinge-corrected", "hinge loss of the corrected hinge Bayes rule", 1.0,
                            synthetic::population_loss_hinge(pm, plus_minus_score(hinge_corrected)),
                            1e-12));
  return r;
}

ExperimentReport example2(const ExperimentConfig& cfg) {
  const double eps = in_range(cfg.epsilon.value_or(0.1), 2.0 / 25.0, 0.25, "epsilon");
  ExperimentReport r;
  r.parameters = {{"epsilon", eps}};
  const auto rep = synthetic::example2_solutions(eps);
  const auto& l1 = *rep.l1_ball;
  const double rad = 0.5 - 2 * eps;
  r.rows.push_back(make_row("AC2.l1-fair-loss", "L1-ball fair-on-X squared loss, at most the stated bound",
                            l1.fair_loss_bound, l1.fair_loss, 1e-10, Comparison::kAtMost));
  r.rows.push_back(make_row("AC2.l1-fair-loss-exact", "same, against 1/16 + 3eps/2 - 3eps^2",
                            l1.fair_loss_formula, l1.fair_loss, 1e-10));
  r.rows.push_back(make_row("AC2.l1-fair-nondiscriminatory", "X independent of A given Y (1 = yes)", 1.0,
                            l1.fair_is_nondiscriminatory ? 1.0 : 0.0, 0.0));
  r.rows.push_back(make_row("AC2.l1-optimum-w1", "constrained optimum w1", 0.0, l1.bayes.w1, 1e-10));
  r.rows.push_back(make_row("AC2.l1-optimum-w2", "constrained optimum w2", rad, l1.bayes.w2, 1e-10));
  r.rows.push_back(make_row("AC2.l1-optimum-b", "constrained optimum b", 0.25 + eps, l1.bayes.b, 1e-10));
  r.rows.push_back(make_row("AC2.l1-kkt-residual", "subgradient-zero residual", 0.0,
                            l1.certificate.stationarity_residual, 1e-10));
  r.rows.push_back(make_row("AC2.l1-kkt-lambda", "norm multiplier", 0.25, l1.certificate.lambda, 1e-10));
  r.rows.push_back(make_row("AC2.l1-kkt-grid", "best loss change over the 1e-3 feasible grid", 0.0,
                            l1.certificate.best_feasible_improvement, 1e-12, Comparison::kAtLeast));
  r.rows.push_back(make_row("AC2.l1-corrected-loss", "post hoc corrected rule loss", 0.25,
                            l1.corrected_loss, 1e-10));
  const auto& sp = rep.one_sparse;
  r.rows.push_back(make_row("AC2.sparse-fair-loss", "1-sparse fair-on-X squared loss",
                            2 * eps - 4 * eps * eps, sp.fair_loss, 1e-10));
  r.rows.push_back(make_row("AC2.sparse-bayes-w2", "1-sparse optimum on A, slope", 1 - 2 * eps, sp.bayes.w2, 1e-10));
  r.rows.push_back(make_row("AC2.sparse-bayes-b", "1-sparse optimum on A, intercept", eps, sp.bayes.b, 1e-10));
  r.rows.push_back(make_row("AC2.sparse-corrected-loss", "1-sparse corrected rule loss", 0.25,
                            sp.corrected_loss, 1e-10));
  return r;
}

ExperimentReport lemma1_detect(const ExperimentConfig& cfg) {
  const double eps = in_range(cfg.epsilon.value_or(0.1), 0.0, 0.25, "epsilon");
  const double alpha = in_range(cfg.alpha.value_or(0.5), 0.0, 1.0, "alpha");
  const double delta = in_range(cfg.delta.value_or(0.1), 0.0, 0.5, "delta");
  const std::size_t trials = cfg.trials.value_or(1000);
  if (trials == 0) throw ConfigError("trials must be positive");

  const auto law = synthetic::d_epsilon(eps);
  const auto cells = law.cell_probabilities();
  const auto n = static_cast<std::size_t>(audit::required_sample_size(alpha, delta, cells));
  const auto fair = BinaryPredictor::threshold(0, 0.5);
  const auto unfair = BinaryPredictor::protected_attribute();

  struct Trial {
    double fair_flag = 0.0;
    double unfair_flag = 0.0;
    double fair_gap = 0.0;
    double unfair_gap = 0.0;
  };
  const auto out = parallel_trials(trials, cfg.seed, [&](std::size_t, std::uint64_t seed) {
    const auto data = law.sample(n, seed);
    const auto f = audit::detect(data, fair, alpha, delta, cells);
    const auto u = audit::detect(data, unfair, alpha, delta, cells);
    return Trial{f.decision == audit::Decision::kFlag ? 1.0 : 0.0,
                 u.decision == audit::Decision::kFlag ? 1.0 : 0.0, f.gap, u.gap};
  });

  ExperimentReport r;
  r.parameters = {{"epsilon", eps}, {"alpha", alpha}, {"delta", delta}, {"trials", trials}, {"n", n}};
  double false_flags = 0.0, misses = 0.0;
  r.raw_header = {"trial", "fair_gap", "fair_flag", "unfair_gap", "unfair_flag"};
  for (std::size_t i = 0; i < trials; ++i) {
    false_flags += out[i].fair_flag;
    misses += 1.0 - out[i].unfair_flag;
    r.raw_rows.push_back({double(i), out[i].fair_gap, out[i].fair_flag, out[i].unfair_gap, out[i].unfair_flag});
  }
  const double m = static_cast<double>(trials);
  const double slack = 3.0 * std::sqrt(delta / m);
  const double pmin = cells.min();
  r.rows.push_back(make_row("AC4.n-required", "ceil(16 log(32/delta) / (alpha^2 min P))",
                            std::ceil(16.0 * std::log(32.0 / delta) / (alpha * alpha * pmin)),
                            static_cast<double>(n), 0.0));
  r.rows.push_back(make_row("AC4.false-flag-rate", "flag rate of X (0-discriminatory)", delta,
                            false_flags / m, slack, Comparison::kAtMost));
  r.rows.push_back(make_row("AC4.miss-rate", "pass rate of A (1-discriminatory)", delta, misses / m,
                            slack, Comparison::kAtMost));
  return r;
}

ExperimentReport theorem4(const ExperimentConfig& cfg) {
  const std::size_t features = cfg.n_features.value_or(64);
  const std::size_t n = cfg.n.value_or(200);
  const std::size_t trials = cfg.trials.value_or(400);
  if (features < 8) throw ConfigError("theorem4 needs at least 8 features");
  if (n < 8 || trials == 0) throw ConfigError("n must be at least 8 and trials positive");
  const auto cells = CellProbabilities::uniform();
  const double alpha = cfg.alpha.value_or(synthetic::theorem4_alpha(features, n, cells.min()));
  in_range(alpha, 0.0, 0.5, "alpha");
  const auto inst = synthetic::theorem4_family(features, alpha, cells);
  const double p = cells(inst.min_cell.y, inst.min_cell.a);

  struct Trial {
    double index = -1.0;
    double gap = 0.0;
    double hit = 0.0;
  };
  const auto out = parallel_trials(trials, cfg.seed, [&](std::size_t, std::uint64_t seed) {
    const auto data = inst.law.sample(n, seed);
    const auto s1 = two_step::step1_constrained_erm(data, inst.hypotheses, alpha);
    Trial t;
    if (s1.index) {
      t.index = static_cast<double>(*s1.index);
      t.gap = inst.law.coordinate_rates(*s1.index).raw_gap();
    }
    t.hit = t.gap >= alpha - 1e-12 ? 1.0 : 0.0;
    return t;
  });

  ExperimentReport r;
  r.parameters = {{"n_features", features}, {"n", n}, {"alpha", alpha}, {"trials", trials}};
  double hits = 0.0;
  r.raw_header = {"trial", "selected_index", "population_gap", "at_least_alpha"};
  for (std::size_t i = 0; i < trials; ++i) {
    hits += out[i].hit;
    r.raw_rows.push_back({double(i), out[i].index, out[i].gap, out[i].hit});
  }
  r.rows.push_back(make_row("AC5.h1-gap", "Gamma of h_1", 0.0, inst.law.coordinate_rates(0).raw_gap(), 1e-12));
  r.rows.push_back(make_row("AC5.h1-loss", "loss of h_1", alpha, inst.law.coordinate_loss(0), 1e-12));
  r.rows.push_back(make_row("AC5.hi-gap", "Gamma of h_2", alpha, inst.law.coordinate_rates(1).raw_gap(), 1e-12));
  r.rows.push_back(make_row("AC5.hi-loss", "loss of h_2", p * alpha, inst.law.coordinate_loss(1), 1e-12));
  r.rows.push_back(make_row("AC5.frequency", "fraction of runs whose step-1 rule is alpha-discriminatory",
                            0.5, hits / static_cast<double>(trials), 0.08, Comparison::kAtLeast));
  return r;
}

ExperimentReport theorem3_rates(const ExperimentConfig& cfg) {
  const double eps = in_range(cfg.epsilon.value_or(0.1), 0.0, 0.25, "epsilon");
  const double delta = in_range(cfg.delta.value_or(0.1), 0.0, 0.5, "delta");
  const std::size_t trials = cfg.trials.value_or(200);
  std::vector<std::size_t> grid = cfg.n_grid;
  if (grid.empty()) grid = {512, 1024, 2048, 4096, 8192, 16384};
  if (grid.size() < 2 || trials == 0) throw ConfigError("need two grid points and positive trials");
  for (auto n : grid)
    if (n < 64) throw ConfigError("grid sizes must be at least 64");

  const auto law = synthetic::d_epsilon(eps);
  const auto cells = law.cell_probabilities();
  const FiniteHypothesisClass cls(
      "d-eps rules", {BinaryPredictor::threshold(0, 0.5), BinaryPredictor::below(0, 0.5),
                      BinaryPredictor::protected_attribute(), BinaryPredictor::protected_attribute(true),
                      BinaryPredictor::constant(0), BinaryPredictor::constant(1)});
  const two_step::PopulationOracle oracle{
      [&law](const BinaryPredictor& h) { return synthetic::population_rates(law, h); }, cells};
  const double l_star = 2.0 * eps;
  const double c = 1.0;

  ExperimentReport r;
  r.parameters = {{"epsilon", eps}, {"delta", delta}, {"trials", trials}, {"n_grid", grid},
                  {"schedule", "rate"}, {"schedule_factor", c}};
  r.raw_header = {"n", "trial", "alpha_n", "gap", "excess_loss", "forced_constant"};

  std::vector<double> ns, gaps, excesses;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const std::size_t n = grid[g];
    struct Trial {
      double alpha = 0.0, gap = 0.0, excess = 0.0, forced = 0.0;
    };
    const auto out = parallel_trials(trials, cfg.seed + 1000003ULL * g, [&](std::size_t, std::uint64_t seed) {
      const auto data = law.sample(n, seed);
      two_step::TwoStepConfig tc;
      tc.delta = delta;
      tc.alpha_n = two_step::Schedule::rate(c);
      tc.alpha_tilde_n = two_step::Schedule::rate(c);
      tc.seed = seed ^ 0x9e3779b97f4a7c15ULL;
      const auto res = two_step::train_two_step(data, cls, tc, oracle);
      return Trial{res.alpha_tilde_n, res.population->corrected_gap,
                   res.population->corrected_loss - l_star,
                   res.step1.constraint_forced_constant ? 1.0 : 0.0};
    });
    std::vector<double> gv, ev;
    for (std::size_t i = 0; i < trials; ++i) {
      gv.push_back(out[i].gap);
      ev.push_back(std::abs(out[i].excess));
      r.raw_rows.push_back({double(n), double(i), out[i].alpha, out[i].gap, out[i].excess, out[i].forced});
    }
    ns.push_back(static_cast<double>(n));
    gaps.push_back(median(gv));
    excesses.push_back(median(ev));
  }
  r.parameters["median_gap"] = gaps;
  r.parameters["median_abs_excess"] = excesses;
  r.rows.push_back(make_range_row("AC6.gap-slope", "log-log slope of median population Gamma",
                                  log_log_slope(ns, gaps), -0.65, -0.35));
  r.rows.push_back(make_range_row("AC6.excess-slope", "log-log slope of median |L - L(Y*)|",
                                  log_log_slope(ns, excesses), -0.65, -0.35));
  return r;
}

// Bordered KKT system [S c; c^T 0] [w; mu] = [s_zy; 0].
Eigen::VectorXd kkt_solve(const sm::SecondMomentModel& m) {
  const auto k = m.dim_z();
  const Eigen::VectorXd c = sm::constraint_vector(m);
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(k + 1, k + 1);
  lhs.topLeftCorner(k, k) = m.sigma_zz();
  lhs.col(k).head(k) = c;
  lhs.row(k).head(k) = c.transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs.head(k) = m.sigma_zy();
  return lhs.fullPivLu().solve(rhs).head(k);
}

double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

ExperimentReport second_moment_equiv(const ExperimentConfig& cfg) {
  const std::size_t models = cfg.trials.value_or(100);
  if (models == 0) throw ConfigError("trials must be positive");
  const std::size_t pgd_models = std::min<std::size_t>(20, models);
  double worst_residual = 0.0, worst_kkt = 0.0, worst_derived = 0.0, worst_orth = 0.0;
  double worst_pgd = 0.0, worst_fd = 0.0;
  for (std::size_t i = 0; i < models; ++i) {
    synthetic::GaussianSpec spec;
    spec.d = 4;
    spec.seed = cfg.seed + i;
    const auto law = synthetic::gaussian_law(spec);
    const auto model = law.moments();
    const auto sol = sm::fit_closed_form(model);
    worst_residual = std::max(worst_residual, sol.constraint_residual / model.scale());
    worst_kkt = std::max(worst_kkt, rel_err(sol.w_star.w, kkt_solve(model)));
    const auto corr = sm::derived_correction(sm::score_moments(model, sol.unconstrained));
    const auto composed = sm::compose(corr, sol.unconstrained, model.dim_z());
    worst_derived = std::max(worst_derived, rel_err(composed.w, sol.w_star.w));
    const double s_ra = sol.unconstrained.w.dot(model.sigma_za());
    worst_orth = std::max(worst_orth, std::abs(s_ra - model.sigma_ya()));

    if (i < pgd_models) {
      const auto data = law.sample(2000, cfg.seed + 7919 * (i + 1));
      const auto em = sm::estimate_moments(data);
      const auto target = sm::fit_closed_form(em);
      const auto fit = sm::fit_constrained_convex(data, sm::Loss::kSquared, em);
      Eigen::VectorXd a(fit.predictor.w.size() + 1), b(a.size());
      a << fit.predictor.w, fit.predictor.b;
      b << target.w_star.w, target.w_star.b;
      worst_pgd = std::max(worst_pgd, rel_err(a, b));

      // Central differences of the empirical risk at a random point.
      Rng rng(cfg.seed + 104729 * (i + 1));
      for (const auto loss : {sm::Loss::kSquared, sm::Loss::kLogistic}) {
        auto bin = data;
        if (loss == sm::Loss::kLogistic)
          for (Eigen::Index t = 0; t < bin.y.size(); ++t) bin.y[t] = bin.y[t] > law.mean[law.mean.size() - 1];
        const sm::EmpiricalRisk risk(bin, loss);
        Eigen::VectorXd w(em.dim_z());
        for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = 0.5 * rng.normal();
        const double b0 = 0.5 * rng.normal();
        const Eigen::VectorXd g = risk.gradient(w, b0);
        const double h = 1e-5;
        for (Eigen::Index j = 0; j <= w.size(); ++j) {
          Eigen::VectorXd wp = w, wm = w;
          double bp = b0, bm = b0;
          if (j < w.size()) {
            wp[j] += h;
            wm[j] -= h;
          } else {
            bp += h;
            bm -= h;
          }
          const double fd = (risk.value(wp, bp) - risk.value(wm, bm)) / (2 * h);
          worst_fd = std::max(worst_fd, std::abs(fd - g[j]) / std::max(1.0, std::abs(g[j])));
        }
      }
    }
  }
  ExperimentReport r;
  r.parameters = {{"models", models}, {"pgd_models", pgd_models}, {"dim_z", 5}};
  r.rows.push_back(make_row("AC7.residual", "max constraint residual / scale", 0.0, worst_residual, 1e-10,
                            Comparison::kAtMost));
  r.rows.push_back(make_row("AC7.kkt", "max relative gap to the KKT solve", 0.0, worst_kkt, 1e-8,
                            Comparison::kAtMost));
  r.rows.push_back(make_row("AC7.derived", "max relative gap of the corrected score to w*", 0.0,
                            worst_derived, 1e-8, Comparison::kAtMost));
  r.rows.push_back(make_row("AC7.orthogonality", "max |sigma_RA - sigma_YA| for least squares", 0.0,
                            worst_orth, 1e-10, Comparison::kAtMost));
  r.rows.push_back(make_row("AC8.pgd", "max relative gap of projected gradient to closed form", 0.0,
                            worst_pgd, 1e-6, Comparison::kAtMost));
  r.rows.push_back(make_row("AC8.gradient", "max relative gap of gradient to central differences", 0.0,
                            worst_fd, 1e-5, Comparison::kAtMost));
  return r;
}

}  // namespace

ClaimRow make_row(std::string claim, std::string description, double reference, double computed,
                  double tolerance, Comparison comparison) {
  ClaimRow row;
  row.claim = std::move(claim);
  row.description = std::move(description);
  row.reference = reference;
  row.computed = computed;
  row.tolerance = tolerance;
  row.comparison = comparison;
  switch (comparison) {
    case Comparison::kAbs:
      row.lower = reference - tolerance;
      row.upper = reference + tolerance;
      row.pass = std::abs(computed - reference) <= tolerance;
      break;
    case Comparison::kAtMost:
      row.lower = -INFINITY;
      row.upper = reference + tolerance;
      row.pass = computed <= row.upper;
      break;
    case Comparison::kAtLeast:
      row.lower = reference - tolerance;
      row.upper = INFINITY;
      row.pass = computed >= row.lower;
      break;
    case Comparison::kInRange:
      break;
  }
  return row;
}

ClaimRow make_range_row(std::string claim, std::string description, double computed, double lower,
                        double upper) {
  ClaimRow row;
  row.claim = std::move(claim);
  row.description = std::move(description);
  row.reference = 0.5 * (lower + upper);
  row.computed = computed;
  row.tolerance = 0.5 * (upper - lower);
  row.comparison = Comparison::kInRange;
  row.lower = lower;
  row.upper = upper;
  row.pass = computed >= lower && computed <= upper;
  return row;
}

bool ExperimentReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ClaimRow& r) { return r.pass; });
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport r;
  try {
    if (config.id == "example1") {
      r = example1(config);
    } else if (config.id == "example2") {
      r = example2(config);
    } else if (config.id == "lemma1-detect") {
      r = lemma1_detect(config);
    } else if (config.id == "theorem4") {
      r = theorem4(config);
    } else if (config.id == "theorem3-rates") {
      r = theorem3_rates(config);
    } else if (config.id == "second-moment-equiv") {
      r = second_moment_equiv(config);
    } else {
      throw ConfigError("unknown experiment '" + config.id + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw Error("experiment " + config.id + ": " + e.what());
  }
  r.experiment = config.id;
  r.seed = config.seed;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

nlohmann::json to_json(const ExperimentReport& report) {
  json rows = json::array();
  auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto& r : report.rows) {
    rows.push_back({{"claim", r.claim},
                    {"description", r.description},
                    {"reference", finite_or_null(r.reference)},
                    {"computed", finite_or_null(r.computed)},
                    {"tolerance", r.tolerance},
                    {"comparison", to_string(r.comparison)},
                    {"lower", finite_or_null(r.lower)},
                    {"upper", finite_or_null(r.upper)},
                    {"pass", r.pass}});
  }
  return {{"experiment", report.experiment},
          {"seed", report.seed},
          {"parameters", report.parameters},
          {"rows", rows},
          {"all_pass", report.all_pass()},
          {"environment",
           {{"library", "eqodds 0.1.0"},
            {"compiler", __VERSION__},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                          "." + std::to_string(EIGEN_MINOR_VERSION)},
            {"seconds", report.seconds}}}};
}

std::string raw_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t j = 0; j < report.raw_header.size(); ++j) out << (j ? "," : "") << report.raw_header[j];
  out << '\n';
  for (const auto& row : report.raw_rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << row[j];
    out << '\n';
  }
  return out.str();
}

double log_log_slope(const std::vector<double>& ns, const std::vector<double>& values) {
  if (ns.size() != values.size() || ns.size() < 2) throw InvalidParameterError("need two matching points");
  double mx = 0.0, my = 0.0;
  const double k = static_cast<double>(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(ns[i] > 0.0 && values[i] > 0.0)) return std::nan("");
    mx += std::log(ns[i]) / k;
    my += std::log(values[i]) / k;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double dx = std::log(ns[i]) - mx;
    sxy += dx * (std::log(values[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace eqodds::experiments
