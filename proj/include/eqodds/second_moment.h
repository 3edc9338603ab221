#pragma once

// Equalized correlations for linear predictors over Z = [X; A]: the single
// linear constraint sigma_RA sigma2_Y = sigma_RY sigma_YA, its closed-form
// least-squares solution, the correction of an unconstrained least-squares
// score, and a projected first-order solver for other convex losses.

#include <Eigen/Dense>
#include <optional>

#include "eqodds/core.h"

namespace eqodds::second_moment {

// Rows z_i = [x_i; a_i] with real labels y_i.
struct RegressionData {
  Eigen::MatrixXd z;
  Eigen::VectorXd y;

  std::size_t size() const { return static_cast<std::size_t>(z.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(z.cols()); }
  // Binary dataset with a appended as the last column of z.
  static RegressionData from_dataset(const Dataset& data);
};

// Mean and covariance over (Z..., Y) = (X..., A, Y). A is the last Z coordinate.
class SecondMomentModel {
 public:
  // Throws InvalidParameterError for mismatched sizes, an asymmetric matrix or
  // sigma2_Y <= 0, SingularCovarianceError if the Z block is not PD.
  SecondMomentModel(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  Eigen::Index dim_z() const { return mean_.size() - 1; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

  Eigen::VectorXd mean_z() const { return mean_.head(dim_z()); }
  double mean_y() const { return mean_[dim_z()]; }
  Eigen::MatrixXd sigma_zz() const { return cov_.topLeftCorner(dim_z(), dim_z()); }
  Eigen::VectorXd sigma_za() const { return cov_.col(dim_z() - 1).head(dim_z()); }
  Eigen::VectorXd sigma_zy() const { return cov_.col(dim_z()).head(dim_z()); }
  double sigma_ya() const { return cov_(dim_z(), dim_z() - 1); }
  double sigma2_y() const { return cov_(dim_z(), dim_z()); }
  double sigma2_a() const { return cov_(dim_z() - 1, dim_z() - 1); }
  // sigma2_Y * max |Sigma_ij|, the reference magnitude for residual checks.
  double scale() const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

struct LinearPredictor {
  Eigen::VectorXd w;
  double b = 0.0;

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& z) const { return w.dot(z) + b; }
};

struct FairLinearSolution {
  LinearPredictor w_star;
  LinearPredictor unconstrained;
  Eigen::VectorXd v;  // Sigma_ZA - Sigma_ZY sigma_YA / sigma2_Y
  double alpha = 0.0;
  double constraint_residual = 0.0;  // |w*^T c|
  bool degenerate = false;           // v vanished; w* is the unconstrained fit
};

struct CorrelationCheck {
  double residual = 0.0;         // sigma_RA sigma2_Y - sigma_RY sigma_YA
  double conditional_cov = 0.0;  // sigma_RA - sigma_RY sigma_YA / sigma2_Y
};

// Second moments of (R, A, Y) for a scalar score R.
struct ScoreMoments {
  double var_r = 0.0;
  double var_a = 0.0;
  double var_y = 0.0;
  double cov_ra = 0.0;
  double cov_ry = 0.0;
  double cov_ya = 0.0;
  double mean_r = 0.0;
  double mean_a = 0.0;
  double mean_y = 0.0;
};

// R* = coef_score * R + coef_a * A + intercept.
struct DerivedCorrection {
  double alpha = 0.0;
  double coef_score = 1.0;
  double coef_a = 0.0;
  double intercept = 0.0;
};

// Unbiased sample moments. Throws TooFewSamplesError for n < dim + 2 and
// SingularCovarianceError when the [X;A] block is singular.
SecondMomentModel estimate_moments(const RegressionData& data);

// c = Sigma_ZA sigma2_Y - Sigma_ZY sigma_YA; w satisfies the constraint iff w^T c = 0.
Eigen::VectorXd constraint_vector(const SecondMomentModel& model);

CorrelationCheck check_equalized_correlations(const SecondMomentModel& model,
                                              const LinearPredictor& predictor);

// E(w^T Z + b - Y)^2 from the moments.
double population_squared_loss(const SecondMomentModel& model, const LinearPredictor& predictor);

LinearPredictor least_squares(const SecondMomentModel& model);

FairLinearSolution fit_closed_form(const SecondMomentModel& model);

ScoreMoments score_moments(const SecondMomentModel& model, const LinearPredictor& score);

// Throws DegenerateDenominatorError when the denominator of alpha vanishes.
DerivedCorrection derived_correction(const ScoreMoments& m);

// The corrected rule expressed over Z, for R = base.
LinearPredictor compose(const DerivedCorrection& correction, const LinearPredictor& base,
                        Eigen::Index dim_z);

enum class Loss { kSquared, kLogistic, kSmoothHinge };

// Width of the quadratic piece replacing the hinge kink.
inline constexpr double kHingeSmoothing = 1e-3;

// Mean loss of w^T z + b over the rows. Logistic and hinge read labels as
// s = 2y - 1 and require y in {0,1}.
class EmpiricalRisk {
 public:
  EmpiricalRisk(const RegressionData& data, Loss loss);

  double value(const Eigen::VectorXd& w, double b) const;
  // Gradient with respect to (w, b), b last.
  Eigen::VectorXd gradient(const Eigen::VectorXd& w, double b) const;

 private:
  const RegressionData& data_;
  Loss loss_;
};

struct SolverParams {
  int max_iterations = 50000;
  double tolerance = 1e-10;  // on the projected gradient norm
  double initial_step = 1.0;
};

struct ConvexFit {
  LinearPredictor predictor;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  double projected_gradient_norm = 0.0;
  double constraint_residual = 0.0;  // |w^T c|
};

// Accelerated projected gradient on w^T c = 0 (b free), data centered
// internally. Without convergence the best iterate is returned, flagged.
ConvexFit fit_constrained_convex(const RegressionData& data, Loss loss,
                                 const SecondMomentModel& model, const SolverParams& params = {},
                                 const std::optional<LinearPredictor>& start = std::nullopt);

}  // namespace eqodds::second_moment
