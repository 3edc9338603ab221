// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "eqodds/audit.h"
#include "eqodds/experiments.h"
#include "eqodds/posthoc.h"
#include "eqodds/random.h"
#include "oracles.h"

using namespace eqodds;
namespace ex = eqodds::experiments;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Runs an experiment and checks every row of the given criterion.
Outcome rows_of(const ex::ExperimentConfig& cfg, int criterion) {
  const auto report = ex::run_experiment(cfg);
  const std::string prefix = "AC" + std::to_string(criterion) + ".";
  Outcome out;
  int checked = 0;
  for (const auto& row : report.rows) {
    if (row.claim.rfind(prefix, 0) != 0) continue;
    ++checked;
    if (!row.pass) {
      out.pass = false;
      char buf[256];
      std::snprintf(buf, sizeof buf, " %s=%.6g", row.claim.c_str(), row.computed);
      out.detail += buf;
    }
  }
  if (checked == 0) {
    out.pass = false;
    out.detail = " no rows";
  }
  if (out.pass) out.detail = " " + std::to_string(checked) + " rows";
  return out;
}

Outcome criterion3() {
  Rng rng(2024);
  Outcome out;
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto s = oracles::random_stats(rng);
    const auto c = posthoc::conservative_correction(s);
    const double lc = posthoc::derived_loss(c, s);
    const bool zero = oracles::gap_of(posthoc::induced_rates(c, s).gamma) <= 1e-12;
    const bool bound = lc <= posthoc::loss_from_rates(s.gamma, s.cells) + oracles::gap_of(s.gamma) + 1e-12;
    const bool dominated = posthoc::derived_loss(posthoc::optimal_derived(s, 0.0), s) <= lc + 1e-12;
    if (!(zero && bound && dominated)) ++bad;
  }
  out.pass = bad == 0;
  out.detail = " " + std::to_string(bad) + " of 1000 instances violate";
  return out;
}

Outcome criterion9() {
  Outcome out;
  int bad_counts = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto data = oracles::random_dataset(50 + seed, 2, 7000 + seed);
    Rng rng(seed);
    const auto h = BinaryPredictor::threshold(rng.below(2), rng.normal());
    const auto r = empirical_rates(data, h);
    const auto c = oracles::count_cells(data, h);
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a) {
        if (r.counts[y][a] != static_cast<std::int64_t>(c.total[y][a])) ++bad_counts;
        else if (c.total[y][a] > 0 && r.gamma[y][a] != c.hits[y][a] / c.total[y][a]) ++bad_counts;
      }
  }
  Rng rng(9);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto s = oracles::random_stats(rng);
    const double tol = t % 2 == 0 ? 0.0 : 0.05;
    const double lp = posthoc::derived_loss(posthoc::optimal_derived(s, tol), s);
    worst = std::max(worst, std::abs(lp - oracles::grid_search_derived(s, tol, 0.01)));
  }
  out.pass = bad_counts == 0 && worst <= 0.02;
  char buf[128];
  std::snprintf(buf, sizeof buf, " count mismatches %d, worst grid gap %.4g", bad_counts, worst);
  out.detail = buf;
  return out;
}

ex::ExperimentConfig config(const std::string& id) {
  ex::ExperimentConfig c;
  c.id = id;
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "0-1 and hinge example exact values", 1, [] { return rows_of(config("example1"), 1); }},
      {2, "squared-loss example values and certificate", 5, [] { return rows_of(config("example2"), 2); }},
      {3, "conservative correction properties", 10, criterion3},
      {4, "detection test error rates", 60, [] { return rows_of(config("lemma1-detect"), 4); }},
      {5, "lower-bound frequency", 120, [] { return rows_of(config("theorem4"), 5); }},
      {6, "two-step convergence slopes", 240, [] { return rows_of(config("theorem3-rates"), 6); }},
      {7, "second-moment equivalences", 5, [] { return rows_of(config("second-moment-equiv"), 7); }},
      {8, "convex solver agreement", 30, [] { return rows_of(config("second-moment-equiv"), 8); }},
      {9, "audit and post hoc oracle equivalence", 30, criterion9},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string(" error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s criterion %d (%s):%s; %.2fs of %.0fs%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_seconds, in_time ? "" : " OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
