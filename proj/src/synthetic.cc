#include "eqodds/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eqodds/errors.h"
#include "eqodds/random.h"

namespace eqodds::synthetic {

namespace {

double code(double v, Coding c) { return c == Coding::kPlusMinusOne ? 2.0 * v - 1.0 : v; }

std::vector<double> coded(const std::vector<double>& x, Coding c) {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [c](double v) { return code(v, c); });
  return out;
}

// Index of u in a cumulative table whose last entry is 1.
std::size_t draw(const std::vector<double>& cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

double squared_loss(const FiniteJointLaw& law, const Linear3& h) {
  return population_loss_squared(law, [h](std::span<const double> x, double a) {
    return h.w1 * x[0] + h.w2 * a + h.b;
  });
}

// Full gradient of E (w1 X + w2 A + b - Y)^2.
std::array<double, 3> squared_gradient(const FiniteJointLaw& law, const Linear3& h) {
  std::array<double, 3> g{};
  for (const Atom& at : law.atoms()) {
    const double r = h.w1 * at.x[0] + h.w2 * at.a + h.b - at.y;
    g[0] += at.prob * 2.0 * r * at.x[0];
    g[1] += at.prob * 2.0 * r * at.a;
    g[2] += at.prob * 2.0 * r;
  }
  return g;
}

// X has the same conditional law given (Y, A=0) and (Y, A=1).
bool x_independent_of_a_given_y(const FiniteJointLaw& law) {
  for (int y = 0; y < 2; ++y) {
    CellTable<double> mass{};
    double m[2] = {0.0, 0.0};
    for (const Atom& at : law.atoms()) {
      if (at.y != y) continue;
      m[at.a] += at.prob;
      mass[static_cast<int>(at.x[0])][at.a] += at.prob;
    }
    for (int x = 0; x < 2; ++x) {
      if (std::abs(mass[x][0] / m[0] - mass[x][1] / m[1]) > 1e-12) return false;
    }
  }
  return true;
}

// min over feasible grid offsets of L(h + offset) - L(h); `active` selects
// the coordinates perturbed, `feasible` filters candidate rules.
double grid_improvement(const FiniteJointLaw& law, const Linear3& h, std::array<bool, 3> active,
                        int half_width, double step,
                        const std::function<bool(const Linear3&)>& feasible,
                        std::size_t& points) {
  const double base = squared_loss(law, h);
  double best = 0.0;
  points = 0;
  const int r0 = active[0] ? half_width : 0;
  const int r1 = active[1] ? half_width : 0;
  const int r2 = active[2] ? half_width : 0;
  for (int i = -r0; i <= r0; ++i) {
    for (int j = -r1; j <= r1; ++j) {
      for (int k = -r2; k <= r2; ++k) {
        if (i == 0 && j == 0 && k == 0) continue;
        const Linear3 p{h.w1 + i * step, h.w2 + j * step, h.b + k * step};
        if (!feasible(p)) continue;
        ++points;
        best = std::min(best, squared_loss(law, p) - base);
      }
    }
  }
  return best;
}

// Least-squares fit of Y on a single variable (0 -> X, 1 -> A) plus intercept.
Linear3 one_variable_fit(const FiniteJointLaw& law, int which) {
  auto v = [which](std::span<const double> x, int a) { return which == 0 ? x[0] : double(a); };
  const double ev = expectation(law, [&](auto x, int a, int) { return v(x, a); });
  const double ey = expectation(law, [](auto, int, int y) { return double(y); });
  const double evv = expectation(law, [&](auto x, int a, int) { return v(x, a) * v(x, a); });
  const double evy = expectation(law, [&](auto x, int a, int y) { return v(x, a) * y; });
  const double slope = (evy - ev * ey) / (evv - ev * ev);
  Linear3 h;
  (which == 0 ? h.w1 : h.w2) = slope;
  h.b = ey - slope * ev;
  return h;
}

}  // namespace

FiniteJointLaw::FiniteJointLaw(std::vector<Atom> atoms, Coding coding)
    : atoms_(std::move(atoms)), coding_(coding) {
  if (atoms_.empty()) throw InvalidParameterError("law needs at least one atom");
  const std::size_t d = atoms_.front().x.size();
  double total = 0.0;
  for (const Atom& at : atoms_) {
    if (at.x.size() != d) throw InvalidParameterError("atoms have different feature dimensions");
    if ((at.a != 0 && at.a != 1) || (at.y != 0 && at.y != 1)) {
      throw InvalidParameterError("a and y must be binary");
    }
    if (!(at.prob > 0.0) || !std::isfinite(at.prob)) {
      throw InvalidParameterError("atom probabilities must be positive");
    }
    total += at.prob;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidParameterError("atom probabilities must sum to 1");
  cumulative_.reserve(atoms_.size());
  double run = 0.0;
  for (Atom& at : atoms_) {
    at.prob /= total;
    run += at.prob;
    cumulative_.push_back(run);
  }
  cumulative_.back() = 1.0;
}

CellProbabilities FiniteJointLaw::cell_probabilities() const {
  CellTable<double> p{};
  for (const Atom& at : atoms_) p[at.y][at.a] += at.prob;
  const double total = p[0][0] + p[0][1] + p[1][0] + p[1][1];
  for (auto& row : p)
    for (double& v : row) v /= total;
  return CellProbabilities(p);
}

Dataset FiniteJointLaw::sample(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw InvalidParameterError("sample size must be positive");
  Rng rng(seed);
  std::vector<LabeledSample> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& at = atoms_[draw(cumulative_, rng.uniform())];
    rows.push_back({at.x, at.a, at.y});
  }
  return Dataset(std::move(rows));
}

GroupRates population_rates(const FiniteJointLaw& law, const BinaryPredictor& predictor) {
  CellTable<double> mass{};
  CellTable<double> accept{};
  for (const Atom& at : law.atoms()) {
    mass[at.y][at.a] += at.prob;
    accept[at.y][at.a] += at.prob * predictor(at.x, at.a);
  }
  GroupRates r;
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      r.present[y][a] = mass[y][a] > 0.0;
      r.gamma[y][a] = r.present[y][a] ? accept[y][a] / mass[y][a] : 0.0;
    }
  }
  return r;
}

double population_loss_01(const FiniteJointLaw& law, const BinaryPredictor& predictor) {
  double loss = 0.0;
  for (const Atom& at : law.atoms()) {
    const double p = predictor(at.x, at.a);
    loss += at.prob * (at.y == 1 ? 1.0 - p : p);
  }
  return loss;
}

double population_loss_hinge(const FiniteJointLaw& law, const RealRule& rule) {
  double loss = 0.0;
  for (const Atom& at : law.atoms()) {
    const double f = rule(coded(at.x, law.coding()), code(at.a, law.coding()));
    const double s = 2.0 * at.y - 1.0;
    loss += at.prob * std::max(0.0, 1.0 - s * f);
  }
  return loss;
}

double population_loss_squared(const FiniteJointLaw& law, const RealRule& rule) {
  double loss = 0.0;
  for (const Atom& at : law.atoms()) {
    const double f = rule(coded(at.x, law.coding()), code(at.a, law.coding()));
    const double r = f - code(at.y, law.coding());
    loss += at.prob * r * r;
  }
  return loss;
}

double expectation(const FiniteJointLaw& law,
                   const std::function<double(std::span<const double>, int, int)>& g) {
  double total = 0.0;
  for (const Atom& at : law.atoms()) total += at.prob * g(at.x, at.a, at.y);
  return total;
}

FiniteJointLaw d_epsilon(double eps, Coding coding) {
  if (!(eps > 0.0 && eps < 0.25)) throw InvalidParameterError("eps must lie in (0, 1/4)");
  std::vector<Atom> atoms;
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      for (int x = 0; x < 2; ++x) {
        const double pa = a == y ? 1.0 - eps : eps;
        const double px = x == y ? 1.0 - 2.0 * eps : 2.0 * eps;
        atoms.push_back({{double(x)}, a, y, 0.5 * pa * px});
      }
    }
  }
  return FiniteJointLaw(std::move(atoms), coding);
}

FactorizedBinaryLaw::FactorizedBinaryLaw(CellProbabilities cells,
                                         std::vector<CellTable<double>> feature_probs)
    : cells_(cells), q_(std::move(feature_probs)) {
  if (q_.empty()) throw InvalidParameterError("factorized law needs at least one feature");
  for (const auto& t : q_)
    for (const auto& row : t)
      for (double v : row)
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidParameterError("feature probabilities must lie in [0,1]");
}

GroupRates FactorizedBinaryLaw::coordinate_rates(std::size_t j) const {
  GroupRates r;
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      r.present[y][a] = cells_(y, a) > 0.0;
      r.gamma[y][a] = q_.at(j)[y][a];
    }
  }
  return r;
}

double FactorizedBinaryLaw::coordinate_loss(std::size_t j) const {
  double loss = 0.0;
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a)
      loss += cells_(y, a) * (y == 1 ? 1.0 - q_.at(j)[y][a] : q_.at(j)[y][a]);
  return loss;
}

Dataset FactorizedBinaryLaw::sample(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw InvalidParameterError("sample size must be positive");
  const std::vector<double> cumulative = {cells_(0, 0), cells_(0, 0) + cells_(0, 1),
                                          cells_(0, 0) + cells_(0, 1) + cells_(1, 0), 1.0};
  Rng rng(seed);
  std::vector<LabeledSample> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cell = static_cast<int>(draw(cumulative, rng.uniform()));
    const int y = cell / 2;
    const int a = cell % 2;
    std::vector<double> x(q_.size());
    for (std::size_t j = 0; j < q_.size(); ++j) x[j] = rng.bernoulli(q_[j][y][a]) ? 1.0 : 0.0;
    rows.push_back({std::move(x), a, y});
  }
  return Dataset(std::move(rows));
}

FiniteJointLaw FactorizedBinaryLaw::to_finite_law() const {
  if (q_.size() > 16) throw InvalidParameterError("too many features to enumerate");
  const std::size_t d = q_.size();
  std::vector<Atom> atoms;
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      if (cells_(y, a) <= 0.0) continue;
      for (std::size_t bits = 0; bits < (std::size_t{1} << d); ++bits) {
        double p = cells_(y, a);
        std::vector<double> x(d);
        for (std::size_t j = 0; j < d; ++j) {
          const bool on = (bits >> j) & 1U;
          x[j] = on ? 1.0 : 0.0;
          p *= on ? q_[j][y][a] : 1.0 - q_[j][y][a];
        }
        if (p > 0.0) atoms.push_back({std::move(x), a, y, p});
      }
    }
  }
  return FiniteJointLaw(std::move(atoms));
}

Theorem4Instance theorem4_family(std::size_t n_features, double alpha,
                                 const CellProbabilities& cells) {
  if (n_features < 2) throw InvalidParameterError("need at least two features");
  if (!(alpha > 0.0 && alpha < 0.5)) throw InvalidParameterError("alpha must lie in (0, 1/2)");

  const Cell order[4] = {{1, 1}, {1, 0}, {0, 1}, {0, 0}};
  Cell min_cell = order[0];
  for (const Cell& c : order) {
    if (cells(c.y, c.a) < cells(min_cell.y, min_cell.a)) min_cell = c;
  }

  std::vector<CellTable<double>> q(n_features);
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      // P(X_1 = y | Y = y) = 1 - alpha in both groups.
      q[0][y][a] = y == 1 ? 1.0 - alpha : alpha;
      for (std::size_t j = 1; j < n_features; ++j) {
        double match = 1.0;
        if (y == min_cell.y && a == min_cell.a) match = 1.0 - alpha;
        q[j][y][a] = y == 1 ? match : 1.0 - match;
      }
    }
  }

  std::vector<BinaryPredictor> hyps;
  hyps.reserve(n_features);
  for (std::size_t j = 0; j < n_features; ++j) {
    hyps.emplace_back("x" + std::to_string(j),
                      [j](std::span<const double> x, int) { return x[j] >= 0.5 ? 1.0 : 0.0; });
  }
  return Theorem4Instance{FactorizedBinaryLaw(cells, std::move(q)),
                          FiniteHypothesisClass("coordinates", std::move(hyps)), min_cell, alpha};
}

double theorem4_alpha(std::size_t class_size, std::size_t n, double min_cell) {
  if (class_size <= 6) throw InvalidParameterError("class needs more than 6 hypotheses");
  if (n == 0 || !(min_cell > 0.0)) throw InvalidParameterError("n and min cell must be positive");
  return 3.0 * std::log((static_cast<double>(class_size) - 1.0) / 5.0) /
         (4.0 * static_cast<double>(n) * min_cell);
}

second_moment::RegressionData GaussianJointLaw::sample(std::size_t n, std::uint64_t seed) const {
  if (n == 0) throw InvalidParameterError("sample size must be positive");
  const Eigen::Index k = mean.size();
  const Eigen::MatrixXd l = cov.llt().matrixL();
  Rng rng(seed);
  second_moment::RegressionData out;
  out.z.resize(static_cast<Eigen::Index>(n), k - 1);
  out.y.resize(static_cast<Eigen::Index>(n));
  Eigen::VectorXd e(k);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    for (Eigen::Index j = 0; j < k; ++j) e[j] = rng.normal();
    const Eigen::VectorXd row = mean + l * e;
    out.z.row(i) = row.head(k - 1).transpose();
    out.y[i] = row[k - 1];
  }
  return out;
}

GaussianJointLaw gaussian_law(const GaussianSpec& spec) {
  if (spec.d < 1) throw InvalidParameterError("need at least one feature");
  if (!(spec.eigen_min > 0.0 && spec.eigen_max >= spec.eigen_min)) {
    throw InvalidParameterError("eigenvalue range must satisfy 0 < min <= max");
  }
  const auto k = static_cast<Eigen::Index>(spec.d + 2);
  Rng rng(spec.seed);
  GaussianJointLaw law;
  law.mean.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) law.mean[i] = spec.mean_scale * rng.normal();

  if (spec.eigen_min == spec.eigen_max) {
    law.cov = spec.eigen_min * Eigen::MatrixXd::Identity(k, k);
    return law;
  }
  Eigen::MatrixXd g(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) g(i, j) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  Eigen::VectorXd lambda(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    lambda[i] = spec.eigen_min + (spec.eigen_max - spec.eigen_min) * rng.uniform();
  }
  law.cov = q * lambda.asDiagonal() * q.transpose();
  law.cov = 0.5 * (law.cov + law.cov.transpose()).eval();
  return law;
}

Example2Report example2_solutions(double eps) {
  if (!(eps > 0.0 && eps < 0.25)) throw InvalidParameterError("eps must lie in (0, 1/4)");
  const FiniteJointLaw law = d_epsilon(eps);
  const double ey = expectation(law, [](auto, int, int y) { return double(y); });
  const bool fair = x_independent_of_a_given_y(law);

  Example2Report out;
  out.epsilon = eps;

  if (eps > 2.0 / 25.0) {
    Example2Class c;
    c.name = "l1-ball";
    const double r = 0.5 - 2.0 * eps;
    c.radius = r;
    c.fair_on_x = {r, 0.0, 0.25 + eps};
    c.fair_loss = squared_loss(law, c.fair_on_x);
    // (1-2eps)(1/4+eps)^2 + 2eps(3/4-eps)^2 expands with -3eps^2; the
    // published +3eps^2 form is an upper bound, not the value.
    c.fair_loss_formula = 1.0 / 16.0 + 1.5 * eps - 3.0 * eps * eps;
    c.fair_loss_bound = 1.0 / 16.0 + 1.5 * eps + 3.0 * eps * eps;
    c.fair_is_nondiscriminatory = fair;
    c.bayes = {0.0, r, 0.25 + eps};
    c.bayes_loss = squared_loss(law, c.bayes);

    auto& k = c.certificate;
    const auto g = squared_gradient(law, c.bayes);
    k.grad_w1 = g[0];
    k.grad_w2 = g[1];
    k.grad_b = g[2];
    // w2 > 0 on the active constraint, so stationarity in w2 fixes lambda.
    k.lambda = -g[1];
    const double norm_gap = std::abs(std::abs(c.bayes.w1) + std::abs(c.bayes.w2) - r);
    k.stationarity_residual =
        std::max({std::abs(g[2]), std::max(0.0, std::abs(g[0]) - k.lambda), std::max(0.0, -k.lambda), norm_gap});
    k.best_feasible_improvement = grid_improvement(
        law, c.bayes, {true, true, true}, 10, 1e-3,
        [r](const Linear3& p) { return std::abs(p.w1) + std::abs(p.w2) <= r + 1e-15; },
        k.grid_points);
    k.certified = k.stationarity_residual <= 1e-12 && k.best_feasible_improvement >= -1e-12;

    // The rule is a function of A alone, so equalized odds forces a constant.
    c.corrected_constant = ey;
    c.corrected_loss = squared_loss(law, {0.0, 0.0, ey});
    out.l1_ball = c;
  }

  Example2Class s;
  s.name = "1-sparse";
  s.fair_on_x = {1.0 - 4.0 * eps, 0.0, 2.0 * eps};
  s.fair_loss = squared_loss(law, s.fair_on_x);
  s.fair_loss_formula = 2.0 * eps - 4.0 * eps * eps;
  s.fair_loss_bound = s.fair_loss_formula;
  s.fair_is_nondiscriminatory = fair;
  const Linear3 on_x = one_variable_fit(law, 0);
  const Linear3 on_a = one_variable_fit(law, 1);
  const double loss_x = squared_loss(law, on_x);
  const double loss_a = squared_loss(law, on_a);
  s.bayes = loss_a <= loss_x ? on_a : on_x;
  s.bayes_loss = std::min(loss_a, loss_x);

  auto& k = s.certificate;
  const auto g = squared_gradient(law, s.bayes);
  k.grad_w1 = g[0];
  k.grad_w2 = g[1];
  k.grad_b = g[2];
  const bool on_a_support = s.bayes.w1 == 0.0;
  k.stationarity_residual = std::max(std::abs(on_a_support ? g[1] : g[0]), std::abs(g[2]));
  k.best_feasible_improvement = grid_improvement(
      law, s.bayes, {!on_a_support, on_a_support, true}, 50, 1e-3,
      [](const Linear3&) { return true; }, k.grid_points);
  k.certified = k.stationarity_residual <= 1e-12 && k.best_feasible_improvement >= -1e-12 &&
                s.bayes_loss <= std::max(loss_a, loss_x);
  s.corrected_constant = ey;
  s.corrected_loss = squared_loss(law, {0.0, 0.0, ey});
  out.one_sparse = s;
  return out;
}

}  // namespace eqodds::synthetic
