#pragma once

// Distributions with exact population oracles: D_eps, the Step-1 lower-bound
// family, and jointly Gaussian moment models.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>

#include "eqodds/core.h"
#include "eqodds/second_moment.h"

namespace eqodds::synthetic {

// How real-valued rules and surrogate losses read the binary variables.
// Atoms are always stored in {0,1}; with kPlusMinusOne, x and a are passed to
// real-valued rules as 2v - 1.
enum class Coding { kZeroOne, kPlusMinusOne };

struct Atom {
  std::vector<double> x;
  int a = 0;
  int y = 0;
  double prob = 0.0;
};

class FiniteJointLaw {
 public:
  // Throws InvalidParameterError unless probabilities are positive and sum to
  // 1 within 1e-9 (they are then renormalized), a, y binary and dimensions agree.
  explicit FiniteJointLaw(std::vector<Atom> atoms, Coding coding = Coding::kZeroOne);

  const std::vector<Atom>& atoms() const { return atoms_; }
  Coding coding() const { return coding_; }
  std::size_t dim() const { return atoms_.front().x.size(); }
  FiniteJointLaw with_coding(Coding coding) const { return FiniteJointLaw(atoms_, coding); }
  CellProbabilities cell_probabilities() const;

  // Throws InvalidParameterError for n == 0.
  Dataset sample(std::size_t n, std::uint64_t seed) const;

 private:
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
  Coding coding_;
};

// Real-valued rule over coded (x, a).
using RealRule = std::function<double(std::span<const double> x, double a)>;

GroupRates population_rates(const FiniteJointLaw& law, const BinaryPredictor& predictor);
double population_loss_01(const FiniteJointLaw& law, const BinaryPredictor& predictor);
// E max(0, 1 - s f) with s = 2Y - 1.
double population_loss_hinge(const FiniteJointLaw& law, const RealRule& rule);
// E (f - Y)^2 with Y in the law's coding.
double population_loss_squared(const FiniteJointLaw& law, const RealRule& rule);
// E g(x, a, y) over raw {0,1} atoms.
double expectation(const FiniteJointLaw& law,
                   const std::function<double(std::span<const double>, int, int)>& g);

// P(Y=1) = 1/2, P(A=y|Y=y) = 1 - eps, P(X=y|Y=y) = 1 - 2 eps, X and A
// independent given Y. Throws InvalidParameterError outside (0, 1/4).
FiniteJointLaw d_epsilon(double eps, Coding coding = Coding::kZeroOne);

// Binary features independent given (Y, A): q[j][y][a] = P(X_j = 1 | Y=y, A=a).
class FactorizedBinaryLaw {
 public:
  FactorizedBinaryLaw(CellProbabilities cells, std::vector<CellTable<double>> feature_probs);

  std::size_t dim() const { return q_.size(); }
  const CellProbabilities& cells() const { return cells_; }
  double feature_probability(std::size_t j, int y, int a) const { return q_.at(j)[y][a]; }

  // Exact rates and loss of the rule h(x, a) = x_j.
  GroupRates coordinate_rates(std::size_t j) const;
  double coordinate_loss(std::size_t j) const;

  Dataset sample(std::size_t n, std::uint64_t seed) const;
  // Enumerates every atom; throws InvalidParameterError above 16 features.
  FiniteJointLaw to_finite_law() const;

 private:
  CellProbabilities cells_;
  std::vector<CellTable<double>> q_;
};

struct Theorem4Instance {
  FactorizedBinaryLaw law;
  FiniteHypothesisClass hypotheses;  // h_j(x, a) = x_j, named "x{j}"
  Cell min_cell;
  double alpha = 0.0;
};

// X_1 matches Y with probability 1 - alpha regardless of A. Every other
// feature equals Y, except in the smallest (y, a) cell (ties prefer (1, 1))
// where it matches Y with probability 1 - alpha, independently across features.
// Throws InvalidParameterError for n_features < 2 or alpha outside (0, 1/2).
Theorem4Instance theorem4_family(std::size_t n_features, double alpha,
                                 const CellProbabilities& cells = CellProbabilities::uniform());

// The step-1 tolerance used by the lower bound: 3 log((|H| - 1)/5) / (4 n p).
double theorem4_alpha(std::size_t class_size, std::size_t n, double min_cell);

struct GaussianSpec {
  std::size_t d = 1;  // number of X features; the law covers (X..., A, Y)
  std::uint64_t seed = 0;
  double eigen_min = 0.5;
  double eigen_max = 2.0;
  double mean_scale = 1.0;  // means drawn N(0, mean_scale^2)
};

struct GaussianJointLaw {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  second_moment::SecondMomentModel moments() const { return {mean, cov}; }
  // Draws rows with z = (X..., A) and real y.
  second_moment::RegressionData sample(std::size_t n, std::uint64_t seed) const;
};

// Covariance Q diag(lambda) Q^T with Q from the QR factorization of a seeded
// Gaussian matrix and lambda uniform on [eigen_min, eigen_max]. An equal
// spectrum gives exactly eigen_min * I.
GaussianJointLaw gaussian_law(const GaussianSpec& spec);

// w1 X + w2 A + b.
struct Linear3 {
  double w1 = 0.0;
  double w2 = 0.0;
  double b = 0.0;
};

struct KktCertificate {
  double grad_w1 = 0.0;
  double grad_w2 = 0.0;
  double grad_b = 0.0;
  double lambda = 0.0;            // multiplier of the norm constraint (0 if none)
  double stationarity_residual = 0.0;
  double best_feasible_improvement = 0.0;  // min over the perturbation grid of L(pert) - L(opt)
  std::size_t grid_points = 0;
  bool certified = false;
};

struct Example2Class {
  std::string name;
  std::optional<double> radius;  // L1 radius; unset for the sparse class
  Linear3 fair_on_x;
  double fair_loss = 0.0;
  double fair_loss_formula = 0.0;
  double fair_loss_bound = 0.0;  // the published upper bound
  bool fair_is_nondiscriminatory = false;
  Linear3 bayes;
  double bayes_loss = 0.0;
  KktCertificate certificate;
  double corrected_constant = 0.0;
  double corrected_loss = 0.0;
};

struct Example2Report {
  double epsilon = 0.0;
  std::optional<Example2Class> l1_ball;  // present for eps in (2/25, 1/4)
  Example2Class one_sparse;
};

// Throws InvalidParameterError for eps outside (0, 1/4).
Example2Report example2_solutions(double eps);

}  // namespace eqodds::synthetic
