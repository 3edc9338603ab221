#pragma once

// Scripted reproductions of the worked examples and Monte Carlo claims. Each
// report row compares one computed quantity against its reference value.

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace eqodds::experiments {

inline const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids = {"example1",      "example2",        "lemma1-detect",
                                               "theorem4",      "theorem3-rates",  "second-moment-equiv"};
  return ids;
}

struct ExperimentConfig {
  std::string id;
  std::uint64_t seed = 1;
  std::optional<double> epsilon;
  std::optional<double> alpha;
  std::optional<double> delta;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> n;
  std::vector<std::size_t> n_grid;
  std::optional<std::size_t> n_features;
};

enum class Comparison {
  kAbs,      // |computed - reference| <= tolerance
  kAtMost,   // computed <= reference + tolerance
  kAtLeast,  // computed >= reference - tolerance
  kInRange,  // lower <= computed <= upper
};

struct ClaimRow {
  std::string claim;  // "AC<k>.<name>", k the acceptance criterion it belongs to
  std::string description;
  double reference = 0.0;
  double computed = 0.0;
  double tolerance = 0.0;
  Comparison comparison = Comparison::kAbs;
  double lower = 0.0;
  double upper = 0.0;
  bool pass = false;
};

ClaimRow make_row(std::string claim, std::string description, double reference, double computed,
                  double tolerance, Comparison comparison = Comparison::kAbs);
ClaimRow make_range_row(std::string claim, std::string description, double computed, double lower,
                        double upper);

struct ExperimentReport {
  std::string experiment;
  std::uint64_t seed = 0;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<ClaimRow> rows;
  // Per-trial data, one row per trial, for external plotting.
  std::vector<std::string> raw_header;
  std::vector<std::vector<double>> raw_rows;
  double seconds = 0.0;

  bool all_pass() const;
};

// Throws ConfigError for an unknown id or out-of-range parameters.
ExperimentReport run_experiment(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentReport& report);
std::string raw_csv(const ExperimentReport& report);

// Ordinary least-squares slope of log(values) on log(ns).
double log_log_slope(const std::vector<double>& ns, const std::vector<double>& values);

}  // namespace eqodds::experiments
