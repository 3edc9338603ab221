#include "eqodds/core.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "eqodds/errors.h"
#include "eqodds/random.h"

namespace eqodds {

Dataset::Dataset(std::vector<LabeledSample> samples, std::optional<std::vector<double>> scores)
    : samples_(std::move(samples)), scores_(std::move(scores)) {
  if (samples_.empty()) throw InvalidParameterError("dataset must be nonempty");
  const std::size_t d = samples_.front().x.size();
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if ((s.a != 0 && s.a != 1) || (s.y != 0 && s.y != 1)) {
      throw InvalidParameterError("sample " + std::to_string(i) + ": a and y must be 0 or 1");
    }
    if (s.x.size() != d) {
      throw InvalidParameterError("sample " + std::to_string(i) + ": feature dimension " +
                                  std::to_string(s.x.size()) + " != " + std::to_string(d));
    }
  }
  if (scores_ && scores_->size() != samples_.size()) {
    throw InvalidParameterError("score column length does not match sample count");
  }
}

std::span<const double> Dataset::scores() const {
  if (!scores_) throw InvalidParameterError("dataset has no score column");
  return *scores_;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<LabeledSample> out;
  out.reserve(indices.size());
  std::optional<std::vector<double>> sc;
  if (scores_) sc.emplace().reserve(indices.size());
  for (std::size_t i : indices) {
    out.push_back(samples_.at(i));
    if (scores_) sc->push_back((*scores_)[i]);
  }
  return Dataset(std::move(out), std::move(sc));
}

CellTable<std::int64_t> Dataset::cell_counts() const {
  CellTable<std::int64_t> n{};
  for (const auto& s : samples_) ++n[s.y][s.a];
  return n;
}

CellProbabilities::CellProbabilities(const CellTable<double>& p) : p_(p) {
  double sum = 0.0;
  for (const auto& row : p_) {
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InvalidParameterError("cell probabilities must be nonnegative");
      }
      sum += v;
    }
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidParameterError("cell probabilities must sum to 1");
  }
}

CellProbabilities CellProbabilities::uniform() { return CellProbabilities(); }

CellProbabilities CellProbabilities::empirical(const Dataset& data) {
  const auto n = data.cell_counts();
  const auto total = static_cast<double>(data.size());
  CellTable<double> p{};
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a) p[y][a] = static_cast<double>(n[y][a]) / total;
  return CellProbabilities(p);
}

double CellProbabilities::min() const {
  return std::min({p_[0][0], p_[0][1], p_[1][0], p_[1][1]});
}

bool GroupRates::all_present() const {
  return present[0][0] && present[0][1] && present[1][0] && present[1][1];
}

std::vector<Cell> GroupRates::empty_cells() const {
  std::vector<Cell> out;
  for (int y = 0; y < 2; ++y)
    for (int a = 0; a < 2; ++a)
      if (!present[y][a]) out.push_back({y, a});
  return out;
}

double GroupRates::raw_gap() const {
  return std::max(std::abs(gamma[0][0] - gamma[0][1]), std::abs(gamma[1][0] - gamma[1][1]));
}

BinaryPredictor::BinaryPredictor(std::string name, Rule rule, bool randomized)
    : name_(std::move(name)), rule_(std::move(rule)), randomized_(randomized) {
  if (!rule_) throw InvalidParameterError("predictor '" + name_ + "' has no rule");
}

double BinaryPredictor::operator()(std::span<const double> x, int a) const {
  const double v = rule_(x, a);
  if (randomized_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidParameterError("predictor '" + name_ + "' returned a value outside [0,1]");
    }
  } else if (v != 0.0 && v != 1.0) {
    throw InvalidParameterError("deterministic predictor '" + name_ + "' returned a non-binary value");
  }
  return v;
}

BinaryPredictor BinaryPredictor::constant(int value) {
  const double v = value ? 1.0 : 0.0;
  return BinaryPredictor("const" + std::to_string(value ? 1 : 0),
                         [v](std::span<const double>, int) { return v; });
}

BinaryPredictor BinaryPredictor::constant_probability(double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameterError("mixing probability outside [0,1]");
  std::ostringstream name;
  name << "bernoulli(" << q << ")";
  return BinaryPredictor(
      name.str(), [q](std::span<const double>, int) { return q; }, true);
}

BinaryPredictor BinaryPredictor::threshold(std::size_t feature, double t) {
  std::ostringstream name;
  name.precision(17);
  name << "x" << feature << ">=" << t;
  return BinaryPredictor(name.str(), [feature, t](std::span<const double> x, int) {
    return x[feature] >= t ? 1.0 : 0.0;
  });
}

BinaryPredictor BinaryPredictor::below(std::size_t feature, double t) {
  std::ostringstream name;
  name.precision(17);
  name << "x" << feature << "<" << t;
  return BinaryPredictor(name.str(), [feature, t](std::span<const double> x, int) {
    return x[feature] < t ? 1.0 : 0.0;
  });
}

BinaryPredictor BinaryPredictor::protected_attribute(bool complement) {
  if (complement) {
    return BinaryPredictor("1-a", [](std::span<const double>, int a) { return a ? 0.0 : 1.0; });
  }
  return BinaryPredictor("a", [](std::span<const double>, int a) { return a ? 1.0 : 0.0; });
}

FiniteHypothesisClass::FiniteHypothesisClass(std::string name, std::vector<BinaryPredictor> hypotheses)
    : name_(std::move(name)), hypotheses_(std::move(hypotheses)) {
  if (hypotheses_.empty()) throw InvalidParameterError("hypothesis class must be nonempty");
  std::unordered_set<std::string> seen;
  for (const auto& h : hypotheses_) {
    if (!seen.insert(h.name()).second) {
      throw InvalidParameterError("duplicate hypothesis name '" + h.name() + "'");
    }
  }
}

FiniteHypothesisClass threshold_family(const Dataset& data, std::size_t feature) {
  if (feature >= data.dim()) throw InvalidParameterError("threshold feature out of range");
  std::set<double> cuts;
  for (const auto& s : data.samples()) cuts.insert(s.x[feature]);
  std::vector<BinaryPredictor> rules;
  rules.reserve(cuts.size() + 1);
  for (double t : cuts) rules.push_back(BinaryPredictor::threshold(feature, t));
  rules.push_back(BinaryPredictor::threshold(feature, std::numeric_limits<double>::infinity()));
  return FiniteHypothesisClass("thresholds(x" + std::to_string(feature) + ")", std::move(rules));
}

std::vector<double> predict(const Dataset& data, const BinaryPredictor& predictor) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& s : data.samples()) out.push_back(predictor(s.x, s.a));
  return out;
}

GroupRates empirical_rates(const Dataset& data, std::span<const double> predictions) {
  if (predictions.size() != data.size()) {
    throw InvalidParameterError("prediction count does not match dataset size");
  }
  CellTable<double> accepted{};
  GroupRates rates;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    accepted[s.y][s.a] += predictions[i];
    ++rates.counts[s.y][s.a];
  }
  for (int y = 0; y < 2; ++y) {
    for (int a = 0; a < 2; ++a) {
      rates.present[y][a] = rates.counts[y][a] > 0;
      rates.gamma[y][a] =
          rates.present[y][a] ? accepted[y][a] / static_cast<double>(rates.counts[y][a]) : 0.0;
    }
  }
  return rates;
}

GroupRates empirical_rates(const Dataset& data, const BinaryPredictor& predictor) {
  const auto p = predict(data, predictor);
  return empirical_rates(data, p);
}

double empirical_loss_01(const Dataset& data, std::span<const double> predictions) {
  if (predictions.size() != data.size()) {
    throw InvalidParameterError("prediction count does not match dataset size");
  }
  double mistakes = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    mistakes += data[i].y ? 1.0 - predictions[i] : predictions[i];
  }
  return mistakes / static_cast<double>(data.size());
}

double empirical_loss_01(const Dataset& data, const BinaryPredictor& predictor) {
  const auto p = predict(data, predictor);
  return empirical_loss_01(data, p);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, std::uint64_t seed) {
  if (data.size() < 2) throw TooFewSamplesError("split needs at least 2 samples");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);
  const std::size_t first = (data.size() + 1) / 2;
  std::span<const std::size_t> all(order);
  return {data.subset(all.first(first)), data.subset(all.subspan(first))};
}

}  // namespace eqodds
