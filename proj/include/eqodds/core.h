#pragma once

// Shared data model: labeled samples, binary predictors, group-conditional
// rates and the discrimination gap.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace eqodds {

// Table indexed [y][a], y, a in {0,1}.
template <class T>
using CellTable = std::array<std::array<T, 2>, 2>;

struct Cell {
  int y = 0;
  int a = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct LabeledSample {
  std::vector<double> x;
  int a = 0;
  int y = 0;
};

class Dataset {
 public:
  Dataset() = default;
  // Throws InvalidParameterError on an empty list, non-binary a/y, ragged
  // feature dimension, or a score column of the wrong length.
  explicit Dataset(std::vector<LabeledSample> samples,
                   std::optional<std::vector<double>> scores = std::nullopt);

  std::size_t size() const { return samples_.size(); }
  std::size_t dim() const { return samples_.empty() ? 0 : samples_.front().x.size(); }
  const LabeledSample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<LabeledSample>& samples() const { return samples_; }

  bool has_scores() const { return scores_.has_value(); }
  // Throws InvalidParameterError if there is no score column.
  std::span<const double> scores() const;

  // Rows at the given indices, in that order (score column carried along).
  Dataset subset(std::span<const std::size_t> indices) const;

  CellTable<std::int64_t> cell_counts() const;

 private:
  std::vector<LabeledSample> samples_;
  std::optional<std::vector<double>> scores_;
};

// Joint probabilities P(Y=y, A=a).
class CellProbabilities {
 public:
  CellProbabilities() = default;
  // Throws InvalidParameterError unless entries are nonnegative and sum to 1
  // (within 1e-9).
  explicit CellProbabilities(const CellTable<double>& p);

  static CellProbabilities uniform();
  static CellProbabilities empirical(const Dataset& data);

  double operator()(int y, int a) const { return p_[y][a]; }
  const CellTable<double>& table() const { return p_; }
  double min() const;
  double label_marginal(int y) const { return p_[y][0] + p_[y][1]; }

 private:
  CellTable<double> p_{{{0.25, 0.25}, {0.25, 0.25}}};
};

// gamma[y][a] = P(Yhat = 1 | Y = y, A = a); counts hold n_ya for sample rates.
struct GroupRates {
  CellTable<double> gamma{};
  CellTable<std::int64_t> counts{};
  CellTable<bool> present{};  // false where the cell has no samples or no mass

  bool all_present() const;
  std::vector<Cell> empty_cells() const;
  // max_y |gamma[y][0] - gamma[y][1]| without checking for empty cells.
  double raw_gap() const;
};

// A decision rule (x, a) -> P(Yhat = 1 | x, a). Deterministic rules return
// exactly 0 or 1.
class BinaryPredictor {
 public:
  using Rule = std::function<double(std::span<const double> x, int a)>;

  BinaryPredictor(std::string name, Rule rule, bool randomized = false);

  double operator()(std::span<const double> x, int a) const;
  const std::string& name() const { return name_; }
  bool randomized() const { return randomized_; }

  static BinaryPredictor constant(int value);
  // Randomized rule accepting with probability q everywhere.
  static BinaryPredictor constant_probability(double q);
  // 1(x_j >= threshold).
  static BinaryPredictor threshold(std::size_t feature, double threshold);
  // 1(x_j >= threshold) evaluated on the opposite side: 1(x_j < threshold).
  static BinaryPredictor below(std::size_t feature, double threshold);
  // Predicts the protected attribute itself (or its complement).
  static BinaryPredictor protected_attribute(bool complement = false);

 private:
  std::string name_;
  Rule rule_;
  bool randomized_;
};

class FiniteHypothesisClass {
 public:
  // Throws InvalidParameterError when empty or when names repeat.
  FiniteHypothesisClass(std::string name, std::vector<BinaryPredictor> hypotheses);

  const std::string& name() const { return name_; }
  std::size_t size() const { return hypotheses_.size(); }
  const BinaryPredictor& operator[](std::size_t i) const { return hypotheses_[i]; }
  const std::vector<BinaryPredictor>& hypotheses() const { return hypotheses_; }

 private:
  std::string name_;
  std::vector<BinaryPredictor> hypotheses_;
};

// Threshold rules 1(x_j >= t) over every distinct observed value of feature j,
// plus the rule that never fires.
FiniteHypothesisClass threshold_family(const Dataset& data, std::size_t feature);

std::vector<double> predict(const Dataset& data, const BinaryPredictor& predictor);

// Expected group-conditional acceptance rates of per-sample acceptance
// probabilities. Empty cells are flagged in `present`, not raised.
GroupRates empirical_rates(const Dataset& data, std::span<const double> predictions);
GroupRates empirical_rates(const Dataset& data, const BinaryPredictor& predictor);

double empirical_loss_01(const Dataset& data, std::span<const double> predictions);
double empirical_loss_01(const Dataset& data, const BinaryPredictor& predictor);

// Seeded shuffle, then halves of sizes ceil(n/2) and floor(n/2).
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, std::uint64_t seed);

}  // namespace eqodds
