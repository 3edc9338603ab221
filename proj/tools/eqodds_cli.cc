// eqodds: audit, correct, train, fit-linear-fair, simulate, reproduce.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "eqodds/audit.h"
#include "eqodds/csv_io.h"
#include "eqodds/errors.h"
#include "eqodds/experiments.h"
#include "eqodds/posthoc.h"
#include "eqodds/second_moment.h"
#include "eqodds/synthetic.h"
#include "eqodds/two_step.h"

using nlohmann::json;
using namespace eqodds;
namespace sm = eqodds::second_moment;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "json";
};

json table_json(const CellTable<double>& t) {
  return json::array({json::array({t[0][0], t[0][1]}), json::array({t[1][0], t[1][1]})});
}

json rates_json(const GroupRates& r) {
  return {{"gamma", table_json(r.gamma)},
          {"counts", json::array({json::array({r.counts[0][0], r.counts[0][1]}),
                                  json::array({r.counts[1][0], r.counts[1][1]})})}};
}

void emit(const Globals& g, const json& doc) {
  const std::string text = doc.dump(2) + "\n";
  if (g.out.empty()) {
    std::cout << text;
  } else {
    io::write_text_atomic(g.out, text);
  }
}

std::vector<double> split_reals(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + item + "' as a number");
    }
    if (used != item.size()) throw ConfigError("cannot parse '" + item + "' as a number");
    out.push_back(v);
  }
  return out;
}

// Per-sample acceptance probabilities read from the score column.
std::vector<double> score_predictions(const Dataset& data, std::optional<double> threshold) {
  if (!data.has_scores()) throw ConfigError("the data file has no score column");
  std::vector<double> p;
  p.reserve(data.size());
  for (double s : data.scores()) {
    if (threshold) {
      p.push_back(s >= *threshold ? 1.0 : 0.0);
    } else {
      if (!(s >= 0.0 && s <= 1.0)) {
        throw ConfigError("scores must lie in [0,1]; pass --threshold for real-valued scores");
      }
      p.push_back(s);
    }
  }
  return p;
}

two_step::Schedule parse_schedule(const std::string& s) {
  if (s == "auto") return two_step::Schedule::lemma4();
  if (s.rfind("rate:", 0) == 0) return two_step::Schedule::rate(split_reals(s.substr(5)).at(0));
  const auto v = split_reals(s);
  if (v.size() != 1) throw ConfigError("schedule must be auto, rate:<c> or a number");
  return two_step::Schedule::fixed(v[0]);
}

FiniteHypothesisClass load_class(const std::string& path, const Dataset& data) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open class spec '" + path + "'");
  json spec;
  try {
    in >> spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("class spec is not valid JSON: ") + e.what());
  }
  std::vector<BinaryPredictor> hyps;
  auto add_builtin = [&](const std::string& name) {
    if (name == "constants") {
      hyps.push_back(BinaryPredictor::constant(0));
      hyps.push_back(BinaryPredictor::constant(1));
    } else if (name == "protected") {
      hyps.push_back(BinaryPredictor::protected_attribute());
      hyps.push_back(BinaryPredictor::protected_attribute(true));
    } else if (name == "binary-features") {
      for (std::size_t j = 0; j < data.dim(); ++j) hyps.push_back(BinaryPredictor::threshold(j, 0.5));
    } else {
      throw ConfigError("unknown built-in '" + name + "'");
    }
  };
  try {
    for (const auto& b : spec.value("builtins", json::array())) add_builtin(b.get<std::string>());
    for (const auto& h : spec.value("hypotheses", json::array())) {
      const std::string type = h.at("type").get<std::string>();
      if (type == "constant") {
        hyps.push_back(BinaryPredictor::constant(h.at("value").get<int>()));
      } else if (type == "protected") {
        hyps.push_back(BinaryPredictor::protected_attribute(h.value("complement", false)));
      } else if (type == "threshold") {
        const auto j = h.at("feature").get<std::size_t>();
        if (j >= data.dim()) throw ConfigError("threshold feature out of range");
        const double t = h.at("threshold").get<double>();
        hyps.push_back(h.value("below", false) ? BinaryPredictor::below(j, t) : BinaryPredictor::threshold(j, t));
      } else if (type == "threshold_family") {
        for (const auto& p : threshold_family(data, h.at("feature").get<std::size_t>()).hypotheses()) {
          hyps.push_back(p);
        }
      } else {
        throw ConfigError("unknown hypothesis type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed class spec: ") + e.what());
  }
  if (hyps.empty()) throw ConfigError("class spec lists no hypotheses");
  return FiniteHypothesisClass(spec.value("name", std::string("class")), std::move(hyps));
}

json derived_json(const posthoc::DerivedPredictor& p) {
  return {{"mix", table_json(p.mix)}, {"mix_layout", "mix[yhat][a] = P(Ytilde=1 | Yhat=yhat, A=a)"}};
}

std::map<std::string, std::string> parse_params(const std::string& s) {
  std::map<std::string, std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("parameter '" + item + "' is not key=value");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

double param(const std::map<std::string, std::string>& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : split_reals(it->second).at(0);
}

std::optional<std::size_t> env_trials() {
  const char* v = std::getenv("EQODDS_TRIALS");
  if (!v || !*v) return std::nullopt;
  try {
    const long n = std::stol(v);
    if (n <= 0) throw ConfigError("EQODDS_TRIALS must be positive");
    return static_cast<std::size_t>(n);
  } catch (const std::logic_error&) {
    throw ConfigError("EQODDS_TRIALS is not an integer");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equalized-odds auditing, correction and fair learning"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--out", g.out, "write the JSON result here instead of stdout");
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"json"}));

  // audit
  std::string data_path, score_col = "score";
  double alpha = 0.0, delta = 0.1;
  std::optional<double> threshold;
  std::string cell_probs;
  auto* audit_cmd = app.add_subcommand("audit", "test a scored dataset for discrimination");
  audit_cmd->add_option("--data", data_path)->required();
  audit_cmd->add_option("--score-col", score_col);
  audit_cmd->add_option("--alpha", alpha)->required();
  audit_cmd->add_option("--delta", delta);
  audit_cmd->add_option("--threshold", threshold, "binarize scores as score >= threshold");
  audit_cmd->add_option("--cell-probs", cell_probs, "p00,p01,p10,p11 with p_ya = P(Y=y, A=a)");

  // correct
  double alpha_tilde = 0.0;
  auto* correct_cmd = app.add_subcommand("correct", "optimal derived predictor of a scored dataset");
  correct_cmd->add_option("--data", data_path)->required();
  correct_cmd->add_option("--score-col", score_col);
  correct_cmd->add_option("--alpha-tilde", alpha_tilde)->required();
  correct_cmd->add_option("--threshold", threshold);

  // train
  std::string class_path, alpha_n = "auto", alpha_tilde_n = "auto";
  auto* train_cmd = app.add_subcommand("train", "two-step fair learning over a finite class");
  train_cmd->add_option("--data", data_path)->required();
  train_cmd->add_option("--class", class_path)->required();
  train_cmd->add_option("--delta", delta);
  train_cmd->add_option("--alpha-n", alpha_n, "auto, rate:<c> or a number");
  train_cmd->add_option("--alpha-tilde-n", alpha_tilde_n, "auto, rate:<c> or a number");

  // fit-linear-fair
  std::string label_col = "y", protected_col = "a", loss_name = "squared", method = "closed-form";
  auto* fit_cmd = app.add_subcommand("fit-linear-fair", "linear predictor under equalized correlations");
  fit_cmd->add_option("--data", data_path)->required();
  fit_cmd->add_option("--label-col", label_col);
  fit_cmd->add_option("--protected-col", protected_col);
  fit_cmd->add_option("--loss", loss_name)->check(CLI::IsMember({"squared", "logistic", "hinge"}));
  fit_cmd->add_option("--method", method)->check(CLI::IsMember({"closed-form", "derived", "pgd"}));

  // simulate
  std::string law_name, params;
  std::size_t n = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "draw a sample from a synthetic law");
  sim_cmd->add_option("--law", law_name)->required()->check(CLI::IsMember({"d-epsilon", "theorem4", "gaussian"}));
  sim_cmd->add_option("--params", params, "comma-separated key=value pairs");
  sim_cmd->add_option("--n", n)->required();

  // reproduce
  experiments::ExperimentConfig ecfg;
  std::optional<double> eps_opt, alpha_opt, delta_opt;
  std::optional<std::size_t> trials_opt, n_opt, features_opt;
  std::vector<std::size_t> grid;
  std::string raw_path;
  auto* repro_cmd = app.add_subcommand("reproduce", "run a scripted reproduction");
  repro_cmd->add_option("--experiment", ecfg.id)->required();
  repro_cmd->add_option("--epsilon", eps_opt);
  repro_cmd->add_option("--alpha", alpha_opt);
  repro_cmd->add_option("--delta", delta_opt);
  repro_cmd->add_option("--trials", trials_opt);
  repro_cmd->add_option("--n", n_opt);
  repro_cmd->add_option("--n-features", features_opt);
  repro_cmd->add_option("--n-grid", grid)->delimiter(',');
  repro_cmd->add_option("--raw-csv", raw_path, "write per-trial data here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*audit_cmd) {
      const auto data = io::load_csv(data_path, score_col);
      const auto preds = score_predictions(data, threshold);
      std::optional<CellProbabilities> cells;
      if (!cell_probs.empty()) {
        const auto v = split_reals(cell_probs);
        if (v.size() != 4) throw ConfigError("--cell-probs needs four values");
        cells = CellProbabilities({{{v[0], v[1]}, {v[2], v[3]}}});
      }
      const auto r = audit::detect(data, preds, alpha, delta, cells);
      emit(g, {{"rates", rates_json(r.rates)},
               {"gamma_s", r.gap},
               {"threshold", r.threshold},
               {"alpha", r.alpha},
               {"delta", r.delta},
               {"decision", audit::to_string(r.decision)},
               {"n", r.n},
               {"n_required", r.n_required},
               {"certified", r.certified},
               {"radius", r.radius},
               {"band", audit::to_string(r.band)},
               {"cell_probabilities_used", table_json(r.cell_probabilities_used.table())},
               {"cell_probabilities_supplied", r.cell_probabilities_supplied}});
      return 0;
    }
    if (*correct_cmd) {
      const auto data = io::load_csv(data_path, score_col);
      const auto preds = score_predictions(data, threshold);
      const auto rates = empirical_rates(data, preds);
      const auto stats = posthoc::RateStatistics::from_rates(rates, CellProbabilities::empirical(data));
      const auto p = posthoc::optimal_derived(stats, alpha_tilde);
      std::vector<double> corrected(preds.size());
      for (std::size_t i = 0; i < preds.size(); ++i) corrected[i] = p.accept_probability(preds[i], data[i].a);
      const auto after = empirical_rates(data, corrected);
      json doc = derived_json(p);
      doc["alpha_tilde"] = alpha_tilde;
      doc["rates_before"] = rates_json(rates);
      doc["rates_after"] = rates_json(after);
      doc["gap_before"] = rates.raw_gap();
      doc["gap_after"] = after.raw_gap();
      doc["loss_before"] = empirical_loss_01(data, preds);
      doc["loss_after"] = empirical_loss_01(data, corrected);
      emit(g, doc);
      return 0;
    }
    if (*train_cmd) {
      const auto data = io::load_csv(data_path);
      const auto cls = load_class(class_path, data);
      two_step::TwoStepConfig tc;
      tc.delta = delta;
      tc.alpha_n = parse_schedule(alpha_n);
      tc.alpha_tilde_n = parse_schedule(alpha_tilde_n);
      tc.seed = g.seed;
      const auto r = two_step::train_two_step(data, cls, tc);
      auto diag = [](const two_step::SplitDiagnostics& d) {
        return json{{"n", d.n},
                    {"step1_loss", d.step1_loss},
                    {"step1_gap", d.step1_gap},
                    {"corrected_loss", d.corrected_loss},
                    {"corrected_gap", d.corrected_gap}};
      };
      emit(g, {{"class", cls.name()},
               {"seed", g.seed},
               {"alpha_n", r.alpha_n},
               {"alpha_tilde_n", r.alpha_tilde_n},
               {"step1",
                {{"predictor", r.step1.predictor.name()},
                 {"index", r.step1.index ? json(*r.step1.index) : json(nullptr)},
                 {"empirical_loss", r.step1.empirical_loss},
                 {"empirical_gap", r.step1.empirical_gap},
                 {"constraint_forced_constant", r.step1.constraint_forced_constant}}},
               {"step2", derived_json(r.step2)},
               {"diagnostics", {{"s1", diag(r.s1)}, {"s2", diag(r.s2)}}}});
      return 0;
    }
    if (*fit_cmd) {
      const auto table = io::load_table(data_path);
      const std::size_t yc = table.column(label_col);
      const std::size_t ac = table.column(protected_col);
      std::vector<std::size_t> xcols;
      for (std::size_t j = 0;; ++j) {
        const auto it = std::find(table.header.begin(), table.header.end(), "x" + std::to_string(j));
        if (it == table.header.end()) break;
        xcols.push_back(static_cast<std::size_t>(it - table.header.begin()));
      }
      sm::RegressionData rd;
      const auto rows = static_cast<Eigen::Index>(table.rows.size());
      const auto d = static_cast<Eigen::Index>(xcols.size());
      rd.z.resize(rows, d + 1);
      rd.y.resize(rows);
      for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < d; ++j) rd.z(i, j) = row[xcols[static_cast<std::size_t>(j)]];
        rd.z(i, d) = row[ac];
        rd.y[i] = row[yc];
      }
      const auto loss = loss_name == "squared"    ? sm::Loss::kSquared
                        : loss_name == "logistic" ? sm::Loss::kLogistic
                                                  : sm::Loss::kSmoothHinge;
      const auto model = sm::estimate_moments(rd);
      const auto closed = sm::fit_closed_form(model);
      sm::LinearPredictor fitted = closed.w_star;
      json extra = json::object();
      if (method == "derived") {
        const auto corr = sm::derived_correction(sm::score_moments(model, closed.unconstrained));
        fitted = sm::compose(corr, closed.unconstrained, model.dim_z());
        extra = {{"derived_alpha", corr.alpha}, {"coef_score", corr.coef_score}, {"coef_a", corr.coef_a}};
      } else if (method == "pgd") {
        const auto fit = sm::fit_constrained_convex(rd, loss, model);
        fitted = fit.predictor;
        extra = {{"converged", fit.converged},
                 {"iterations", fit.iterations},
                 {"projected_gradient_norm", fit.projected_gradient_norm}};
      } else if (loss != sm::Loss::kSquared) {
        throw ConfigError("closed-form and derived fits use squared loss; use --method pgd");
      }
      const sm::EmpiricalRisk risk(rd, loss);
      const auto check = sm::check_equalized_correlations(model, fitted);
      auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
      json doc = {{"method", method},
                  {"loss", loss_name},
                  {"w", vec(fitted.w)},
                  {"b", fitted.b},
                  {"alpha", closed.alpha},
                  {"v", vec(closed.v)},
                  {"degenerate", closed.degenerate},
                  {"residual", check.residual},
                  {"conditional_cov", check.conditional_cov},
                  {"scale", model.scale()},
                  {"loss_constrained", risk.value(fitted.w, fitted.b)},
                  {"loss_unconstrained_least_squares",
                   risk.value(closed.unconstrained.w, closed.unconstrained.b)}};
      doc.update(extra);
      emit(g, doc);
      return 0;
    }
    if (*sim_cmd) {
      if (g.out.empty()) throw ConfigError("simulate needs --out");
      if (n == 0) throw ConfigError("--n must be positive");
      const auto p = parse_params(params);
      if (law_name == "d-epsilon") {
        io::write_csv(synthetic::d_epsilon(param(p, "eps", 0.1)).sample(n, g.seed), g.out);
      } else if (law_name == "theorem4") {
        const auto features = static_cast<std::size_t>(param(p, "features", 64));
        const double a = param(p, "alpha", synthetic::theorem4_alpha(features, n, 0.25));
        io::write_csv(synthetic::theorem4_family(features, a).law.sample(n, g.seed), g.out);
      } else {
        synthetic::GaussianSpec spec;
        spec.d = static_cast<std::size_t>(param(p, "d", 4));
        spec.seed = static_cast<std::uint64_t>(param(p, "law_seed", 0));
        spec.eigen_min = param(p, "eigen_min", spec.eigen_min);
        spec.eigen_max = param(p, "eigen_max", spec.eigen_max);
        const auto rd = synthetic::gaussian_law(spec).sample(n, g.seed);
        io::Table t;
        for (std::size_t j = 0; j < spec.d; ++j) t.header.push_back("x" + std::to_string(j));
        t.header.push_back("a");
        t.header.push_back("y");
        for (Eigen::Index i = 0; i < rd.z.rows(); ++i) {
          std::vector<double> row;
          for (Eigen::Index j = 0; j < rd.z.cols(); ++j) row.push_back(rd.z(i, j));
          row.push_back(rd.y[i]);
          t.rows.push_back(std::move(row));
        }
        io::write_text_atomic(g.out, io::format_table(t));
      }
      return 0;
    }
    if (*repro_cmd) {
      ecfg.seed = g.seed;
      ecfg.epsilon = eps_opt;
      ecfg.alpha = alpha_opt;
      ecfg.delta = delta_opt;
      ecfg.trials = trials_opt ? trials_opt : env_trials();
      ecfg.n = n_opt;
      ecfg.n_features = features_opt;
      ecfg.n_grid = grid;
      const auto report = experiments::run_experiment(ecfg);
      if (!raw_path.empty()) io::write_text_atomic(raw_path, experiments::raw_csv(report));
      emit(g, experiments::to_json(report));
      for (const auto& row : report.rows) {
        std::cerr << (row.pass ? "PASS " : "FAIL ") << row.claim << " computed=" << row.computed << "\n";
      }
      return report.all_pass() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
