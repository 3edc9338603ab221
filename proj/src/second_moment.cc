#include "eqodds/second_moment.h"

#include <cmath>
#include <limits>

#include "eqodds/errors.h"

namespace eqodds::second_moment {

namespace {

constexpr double kDegenerateTol = 1e-12;

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Loss of a single score f against label y, and its derivative in f.
std::pair<double, double> pointwise(Loss loss, double f, double y) {
  switch (loss) {
    case Loss::kSquared:
      return {(f - y) * (f - y), 2.0 * (f - y)};
    case Loss::kLogistic: {
      const double s = 2.0 * y - 1.0;
      return {softplus(-s * f), -s * sigmoid(-s * f)};
    }
    case Loss::kSmoothHinge: {
      const double s = 2.0 * y - 1.0;
      const double m = s * f;
      const double h = kHingeSmoothing;
      if (m >= 1.0) return {0.0, 0.0};
      if (m <= 1.0 - h) return {1.0 - m - h / 2.0, -s};
      const double u = 1.0 - m;
      return {u * u / (2.0 * h), -s * u / h};
    }
  }
  return {0.0, 0.0};
}

Eigen::VectorXd project(const Eigen::VectorXd& w, const Eigen::VectorXd& c, double cc) {
  if (cc == 0.0) return w;
  return w - c * (c.dot(w) / cc);
}

}  // namespace

RegressionData RegressionData::from_dataset(const Dataset& data) {
  RegressionData out;
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(data.dim());
  out.z.resize(n, d + 1);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = data[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j) out.z(i, j) = s.x[static_cast<std::size_t>(j)];
    out.z(i, d) = s.a;
    out.y[i] = s.y;
  }
  return out;
}

SecondMomentModel::SecondMomentModel(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  const auto k = mean_.size();
  if (k < 2) throw InvalidParameterError("moment model needs at least A and Y");
  if (cov_.rows() != k || cov_.cols() != k) {
    throw InvalidParameterError("covariance size does not match the mean");
  }
  if (!mean_.allFinite() || !cov_.allFinite()) throw InvalidParameterError("non-finite moments");
  const double mag = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * mag) {
    throw InvalidParameterError("covariance is not symmetric");
  }
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
  if (!(sigma2_y() > 0.0)) throw InvalidParameterError("label variance must be positive");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_zz(), Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (!(lo > 1e-12 * hi)) throw SingularCovarianceError(lo);
}

double SecondMomentModel::scale() const { return sigma2_y() * cov_.cwiseAbs().maxCoeff(); }

SecondMomentModel estimate_moments(const RegressionData& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto d = static_cast<Eigen::Index>(data.dim());
  if (data.y.size() != n) throw InvalidParameterError("label count does not match rows");
  if (n < d + 2) throw TooFewSamplesError("moment estimation needs at least dim + 2 rows");
  Eigen::MatrixXd m(n, d + 1);
  m.leftCols(d) = data.z;
  m.col(d) = data.y;
  const Eigen::VectorXd mean = m.colwise().mean().transpose();
  m.rowwise() -= mean.transpose();
  Eigen::MatrixXd cov = (m.transpose() * m) / static_cast<double>(n - 1);
  return SecondMomentModel(mean, cov);
}

Eigen::VectorXd constraint_vector(const SecondMomentModel& model) {
  return model.sigma_za() * model.sigma2_y() - model.sigma_zy() * model.sigma_ya();
}

CorrelationCheck check_equalized_correlations(const SecondMomentModel& model,
                                              const LinearPredictor& predictor) {
  if (predictor.w.size() != model.dim_z()) throw InvalidParameterError("weight size mismatch");
  const double s_ra = predictor.w.dot(model.sigma_za());
  const double s_ry = predictor.w.dot(model.sigma_zy());
  CorrelationCheck out;
  out.residual = s_ra * model.sigma2_y() - s_ry * model.sigma_ya();
  out.conditional_cov = s_ra - s_ry * model.sigma_ya() / model.sigma2_y();
  return out;
}

double population_squared_loss(const SecondMomentModel& model, const LinearPredictor& predictor) {
  if (predictor.w.size() != model.dim_z()) throw InvalidParameterError("weight size mismatch");
  const auto& w = predictor.w;
  const double var = w.dot(model.sigma_zz() * w) - 2.0 * w.dot(model.sigma_zy()) + model.sigma2_y();
  const double bias = w.dot(model.mean_z()) + predictor.b - model.mean_y();
  return var + bias * bias;
}

LinearPredictor least_squares(const SecondMomentModel& model) {
  LinearPredictor p;
  p.w = model.sigma_zz().llt().solve(model.sigma_zy());
  p.b = model.mean_y() - p.w.dot(model.mean_z());
  return p;
}

FairLinearSolution fit_closed_form(const SecondMomentModel& model) {
  const Eigen::LLT<Eigen::MatrixXd> llt(model.sigma_zz());
  if (llt.info() != Eigen::Success) throw SingularCovarianceError(0.0);

  FairLinearSolution out;
  out.unconstrained.w = llt.solve(model.sigma_zy());
  out.unconstrained.b = model.mean_y() - out.unconstrained.w.dot(model.mean_z());
  out.v = model.sigma_za() - model.sigma_zy() * (model.sigma_ya() / model.sigma2_y());

  if (out.v.norm() <= kDegenerateTol * model.scale()) {
    out.degenerate = true;
    out.alpha = 0.0;
    out.w_star = out.unconstrained;
  } else {
    const Eigen::VectorXd sinv_v = llt.solve(out.v);
    out.alpha = sinv_v.dot(model.sigma_zy()) / sinv_v.dot(out.v);
    out.w_star.w = out.unconstrained.w - out.alpha * sinv_v;
    out.w_star.b = model.mean_y() - out.w_star.w.dot(model.mean_z());
  }
  out.constraint_residual = std::abs(out.w_star.w.dot(constraint_vector(model)));
  return out;
}

ScoreMoments score_moments(const SecondMomentModel& model, const LinearPredictor& score) {
  if (score.w.size() != model.dim_z()) throw InvalidParameterError("weight size mismatch");
  ScoreMoments m;
  m.var_r = score.w.dot(model.sigma_zz() * score.w);
  m.var_a = model.sigma2_a();
  m.var_y = model.sigma2_y();
  m.cov_ra = score.w.dot(model.sigma_za());
  m.cov_ry = score.w.dot(model.sigma_zy());
  m.cov_ya = model.sigma_ya();
  m.mean_r = score(model.mean_z());
  m.mean_a = model.mean_z()[model.dim_z() - 1];
  m.mean_y = model.mean_y();
  return m;
}

DerivedCorrection derived_correction(const ScoreMoments& m) {
  if (!(m.var_y > 0.0)) throw InvalidParameterError("label variance must be positive");
  const double s2 = m.var_y;
  const double num = m.cov_ya - m.cov_ry * m.cov_ya / s2;
  const double den = m.var_a - 2.0 * m.cov_ya * m.cov_ya / s2 + m.cov_ry * m.cov_ya * m.cov_ya / (s2 * s2);
  const double mag = std::max({m.var_a, std::abs(m.cov_ya), std::abs(m.cov_ry), 1e-300});
  DerivedCorrection out;
  if (num == 0.0) {
    out.alpha = 0.0;
  } else {
    if (std::abs(den) <= 1e-14 * mag) throw DegenerateDenominatorError(den);
    out.alpha = num / den;
  }
  out.coef_score = 1.0 + out.alpha * m.cov_ya / s2;
  out.coef_a = -out.alpha;
  out.intercept = m.mean_y - out.coef_score * m.mean_r - out.coef_a * m.mean_a;
  return out;
}

LinearPredictor compose(const DerivedCorrection& correction, const LinearPredictor& base,
                        Eigen::Index dim_z) {
  if (base.w.size() != dim_z) throw InvalidParameterError("weight size mismatch");
  LinearPredictor out;
  out.w = correction.coef_score * base.w;
  out.w[dim_z - 1] += correction.coef_a;
  out.b = correction.coef_score * base.b + correction.intercept;
  return out;
}

EmpiricalRisk::EmpiricalRisk(const RegressionData& data, Loss loss) : data_(data), loss_(loss) {
  if (data.size() == 0) throw InvalidParameterError("empty data");
  if (data.y.size() != data.z.rows()) throw InvalidParameterError("label count does not match rows");
  if (loss != Loss::kSquared) {
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
      if (data.y[i] != 0.0 && data.y[i] != 1.0) {
        throw InvalidParameterError("classification losses need labels in {0,1}");
      }
    }
  }
}

double EmpiricalRisk::value(const Eigen::VectorXd& w, double b) const {
  const Eigen::VectorXd f = (data_.z * w).array() + b;
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) total += pointwise(loss_, f[i], data_.y[i]).first;
  return total / static_cast<double>(f.size());
}

Eigen::VectorXd EmpiricalRisk::gradient(const Eigen::VectorXd& w, double b) const {
  const Eigen::VectorXd f = (data_.z * w).array() + b;
  Eigen::VectorXd dl(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) dl[i] = pointwise(loss_, f[i], data_.y[i]).second;
  const double n = static_cast<double>(f.size());
  Eigen::VectorXd g(w.size() + 1);
  g.head(w.size()) = data_.z.transpose() * dl / n;
  g[w.size()] = dl.sum() / n;
  return g;
}

ConvexFit fit_constrained_convex(const RegressionData& data, Loss loss,
                                 const SecondMomentModel& model, const SolverParams& params,
                                 const std::optional<LinearPredictor>& start) {
  const auto d = static_cast<Eigen::Index>(data.dim());
  if (d != model.dim_z()) throw InvalidParameterError("data and model dimensions differ");
  if (params.max_iterations < 0 || !(params.tolerance > 0.0) || !(params.initial_step > 0.0)) {
    throw InvalidParameterError("invalid solver parameters");
  }

  const Eigen::RowVectorXd center = data.z.colwise().mean();
  RegressionData centered{data.z.rowwise() - center, data.y};
  const EmpiricalRisk risk(centered, loss);

  const Eigen::VectorXd c = constraint_vector(model);
  const double cc = c.norm() <= kDegenerateTol * model.scale() ? 0.0 : c.squaredNorm();

  // theta = (w, b') with b' the intercept on centered features.
  auto split_value = [&](const Eigen::VectorXd& th) { return risk.value(th.head(d), th[d]); };
  auto split_grad = [&](const Eigen::VectorXd& th) { return risk.gradient(th.head(d), th[d]); };
  auto proj = [&](Eigen::VectorXd th) {
    th.head(d) = project(th.head(d), c, cc);
    return th;
  };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(d + 1);
  if (start) {
    if (start->w.size() != d) throw InvalidParameterError("start weight size mismatch");
    x.head(d) = start->w;
    x[d] = start->b + start->w.dot(center.transpose());
  }
  x = proj(x);

  double fx = split_value(x);
  Eigen::VectorXd best = x;
  double best_f = fx;
  double lipschitz = 1.0 / params.initial_step;
  double t = 1.0;
  Eigen::VectorXd yk = x;

  ConvexFit out;
  int it = 0;
  Eigen::VectorXd gx = split_grad(x);
  double pg_norm = proj(gx).norm();
  for (; it < params.max_iterations && pg_norm > params.tolerance; ++it) {
    const Eigen::VectorXd gy = split_grad(yk);
    Eigen::VectorXd x_new, g_new;
    // Backtracking on the convex Bregman bound D(x, y) <= <g(x) - g(y), x - y>,
    // which stays accurate where objective differences drown in rounding.
    lipschitz *= 0.9;
    for (int bt = 0; bt < 200; ++bt) {
      x_new = proj(yk - gy / lipschitz);
      g_new = split_grad(x_new);
      const Eigen::VectorXd step = x_new - yk;
      if ((g_new - gy).dot(step) <= 0.5 * lipschitz * step.squaredNorm()) break;
      lipschitz *= 2.0;
    }
    // Gradient-based adaptive restart keeps the momentum from overshooting.
    if ((yk - x_new).dot(x_new - x) > 0.0) t = 1.0;
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    yk = proj(x_new + ((t - 1.0) / t_new) * (x_new - x));
    x = x_new;
    gx = g_new;
    fx = split_value(x);
    t = t_new;
    if (fx < best_f) {
      best_f = fx;
      best = x;
    }
    pg_norm = proj(gx).norm();
  }

  out.converged = pg_norm <= params.tolerance;
  const Eigen::VectorXd& chosen = out.converged ? x : best;
  out.predictor.w = chosen.head(d);
  out.predictor.b = chosen[d] - out.predictor.w.dot(center.transpose());
  out.iterations = it;
  out.objective = split_value(chosen);
  out.projected_gradient_norm = out.converged ? pg_norm : proj(split_grad(chosen)).norm();
  out.constraint_residual = std::abs(out.predictor.w.dot(c));
  return out;
}

}  // namespace eqodds::second_moment
