// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Optional arguments are substring filters selecting a subset of
// criteria (useful while iterating; the test driver runs everything).

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "dtr/clause_search.hpp"
#include "dtr/kernel_ridge.hpp"
#include "dtr/list_builder.hpp"
#include "dtr/pipeline.hpp"
#include "dtr/scenarios.hpp"
#include "panel_gen.hpp"

using namespace dtr;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

class Harness {
 public:
  explicit Harness(std::vector<std::string> filters) : filters_(std::move(filters)) {}

  void run(const std::string& name, const std::function<Outcome()>& fn) {
    if (!selected(name)) return;
    ++total_;
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      out = fn();
    } catch (const std::exception& e) {
      out.pass = false;
      out.details = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!out.pass) ++failures_;
    std::ostringstream line;
    line << (out.pass ? "PASS" : "FAIL") << " " << name;
    if (!out.details.empty()) line << " | " << out.details;
    line << " | " << static_cast<long>(secs + 0.5) << "s";
    std::cout << line.str() << std::endl;
  }

  int finish() const {
    std::cout << (failures_ == 0 ? "ACCEPTANCE OK" : "ACCEPTANCE FAILED") << " (" << total_ - failures_
              << "/" << total_ << " criteria)" << std::endl;
    return failures_ == 0 ? 0 : 1;
  }

 private:
  bool selected(const std::string& name) const {
    if (filters_.empty()) return true;
    for (const auto& f : filters_)
      if (name.find(f) != std::string::npos) return true;
    return false;
  }

  std::vector<std::string> filters_;
  int total_ = 0;
  int failures_ = 0;
};

std::vector<int> all_columns(Eigen::Index d) {
  std::vector<int> cols(static_cast<std::size_t>(d));
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = static_cast<int>(j);
  return cols;
}

std::set<int> covered_rows(const WeightPanel& panel, const Region& r) {
  std::set<int> rows;
  for (Eigen::Index i = 0; i < panel.n(); ++i)
    if (panel.active[static_cast<std::size_t>(i)] && region_contains(r, panel.X.row(i)))
      rows.insert(static_cast<int>(i));
  return rows;
}

// --------------------------------------------------------------------------
// Fast search vs. exhaustive oracle.
// --------------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  const int panels = 1000;
  int bad = 0;
  std::string first_bad;
  double worst_gap = 0.0;
  for (int s = 1; s <= panels; ++s) {
    const PanelSetup setup = random_panel(777000 + static_cast<std::uint64_t>(s));
    const std::vector<int> cols = all_columns(setup.panel.dim());
    const ClauseResult fast = best_clause(setup.panel, setup.eta, cols);
    const ClauseResult oracle = brute_force_best_clause(setup.panel, setup.eta, cols);
    const double gap = std::abs(fast.objective - oracle.objective);
    worst_gap = std::max(worst_gap, gap);
    const bool same_rows =
        covered_rows(setup.panel, fast.region) == covered_rows(setup.panel, oracle.region);

    // Same covered subjects means zero empirical set distance on the active
    // sample the clause applies to.
    Eigen::MatrixXd active_x(setup.panel.active_count(), setup.panel.dim());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < setup.panel.n(); ++i)
      if (setup.panel.active[static_cast<std::size_t>(i)]) active_x.row(r++) = setup.panel.X.row(i);
    const double rho = empirical_rho(fast.region, oracle.region, active_x);

    if (gap > 1e-9 || fast.action != oracle.action || !same_rows || rho != 0.0) {
      ++bad;
      if (first_bad.empty()) {
        std::ostringstream what;
        what << "seed " << s << " gap=" << gap << " actions " << fast.action << "/"
             << oracle.action << " rho=" << rho;
        first_bad = what.str();
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Outcome out;
  out.pass = bad == 0 && secs <= 300.0;
  std::ostringstream details;
  details << panels << " panels, worst objective gap " << worst_gap << ", " << bad
          << " mismatches, " << secs << "s (limit 300)";
  if (!first_bad.empty()) details << "; first: " << first_bad;
  out.details = details.str();
  return out;
}

// --------------------------------------------------------------------------
// O(n log n) scaling evidence.
// --------------------------------------------------------------------------

WeightPanel scaling_panel(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> draw(0.0, 1.0);
  Eigen::MatrixXd X(n, 4);
  Eigen::MatrixXd U(n, 2);
  for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = draw(rng);
  for (Eigen::Index i = 0; i < U.size(); ++i) U(i) = draw(rng);
  return WeightPanel::make(std::move(X), std::move(U), std::vector<std::uint8_t>(n, 1));
}

double time_best_clause(const WeightPanel& panel) {
  const auto start = std::chrono::steady_clock::now();
  const ClauseResult res = best_clause(panel, 0.01, {0, 1, 2, 3});
  (void)res;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome search_scaling() {
  (void)time_best_clause(scaling_panel(1000, 1));  // warm up
  double t4 = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < 3; ++rep) t4 = std::min(t4, time_best_clause(scaling_panel(10000, 2)));
  double t5 = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < 2; ++rep) t5 = std::min(t5, time_best_clause(scaling_panel(100000, 3)));
  const double ratio = t5 / t4;
  Outcome out;
  out.pass = ratio <= 25.0;
  std::ostringstream details;
  details << "t(1e4)=" << t4 << "s t(1e5)=" << t5 << "s ratio=" << ratio
          << " (quadratic would be >= 100)";
  out.details = details.str();
  return out;
}

// --------------------------------------------------------------------------
// Kernel ridge identities.
// --------------------------------------------------------------------------

double loo_refit_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const KernelParams& params, double lambda, Eigen::Index hold) {
  const Eigen::Index n = X.rows();
  const double ridge = static_cast<double>(n) * lambda;
  Eigen::MatrixXd Xr(n - 1, X.cols());
  Eigen::VectorXd yr(n - 1);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == hold) continue;
    Xr.row(r) = X.row(i);
    yr(r) = y(i);
    ++r;
  }
  Eigen::MatrixXd K(n - 1, n - 1);
  for (Eigen::Index i = 0; i < n - 1; ++i)
    for (Eigen::Index j = 0; j < n - 1; ++j)
      K(i, j) = kernel_eval(params, Xr.row(i), Xr.row(j));
  K.diagonal().array() += ridge;
  const Eigen::VectorXd beta = K.ldlt().solve(yr);
  double pred = 0.0;
  for (Eigen::Index i = 0; i < n - 1; ++i)
    pred += kernel_eval(params, X.row(hold), Xr.row(i)) * beta(i);
  return pred;
}

Outcome krr_identities() {
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> draw(0.0, 1.0);
  double worst_residual = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 5 + static_cast<int>(rng() % 36);
    const int d = 1 + static_cast<int>(rng() % 5);
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = draw(rng);
    for (int i = 0; i < n; ++i) y(i) = draw(rng);
    Eigen::VectorXd gamma(d);
    for (int j = 0; j < d; ++j) gamma(j) = std::exp(draw(rng));
    const double lambda = std::exp(-2.0 + 2.0 * draw(rng));
    const KrrModel m = fit_krr(X, y, KernelParams{gamma}, lambda, 1e6);
    const Eigen::MatrixXd K = gram_matrix(KernelParams{gamma}, X);
    const double resid =
        (K * m.beta + static_cast<double>(n) * lambda * m.beta - y).norm() / y.norm();
    worst_residual = std::max(worst_residual, resid);
  }

  double worst_loo = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 5 + static_cast<int>(rng() % 26);  // n <= 30
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = draw(rng);
    for (int i = 0; i < n; ++i) y(i) = draw(rng);
    const KernelParams p{(Eigen::VectorXd(2) << 0.9, 1.4).finished()};
    const double lambda = std::pow(10.0, -1.0 - rep % 4);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double e = y(i) - loo_refit_oracle(X, y, p, lambda, i);
      acc += e * e;
    }
    worst_loo = std::max(worst_loo, std::abs(loocv_mse(X, y, p, lambda) - acc / n));
  }

  Outcome out;
  out.pass = worst_residual <= 1e-8 && worst_loo <= 1e-6;
  std::ostringstream details;
  details << "worst representer residual " << worst_residual << " (<=1e-8), worst loocv gap "
          << worst_loo << " (<=1e-6)";
  out.details = details.str();
  return out;
}

// --------------------------------------------------------------------------
// Single-covariate recovery with an exactly known value function.
// --------------------------------------------------------------------------

Outcome zero_threshold_recovery() {
  const int n = 2000;
  std::mt19937_64 rng(20240811);
  std::uniform_real_distribution<double> draw(-2.0, 2.0);
  Eigen::MatrixXd X(n, 1);
  Eigen::MatrixXd Q(n, 2);
  for (int i = 0; i < n; ++i) {
    const double x = draw(rng);
    X(i, 0) = x;
    const double g = x * (x - 1.0);
    Q(i, 0) = -g;
    Q(i, 1) = g;
  }
  const double zeta = 0.01, eta = 0.01;
  Eigen::MatrixXd U(n, 2);
  for (int i = 0; i < n; ++i) {
    const double qmax = std::max(Q(i, 0), Q(i, 1));
    U(i, 0) = qmax - Q(i, 0) - zeta;
    U(i, 1) = qmax - Q(i, 1) - zeta;
  }
  WeightPanel panel = WeightPanel::make(X, U, std::vector<std::uint8_t>(n, 1));
  const ClauseResult res = best_clause(panel, eta, {0});
  Outcome out;
  out.pass = res.region.form == RegionForm::Le && res.action == 1 &&
             std::abs(res.region.tau1) <= 0.1;
  std::ostringstream details;
  details << "first clause " << region_form_name(res.region.form) << " tau="
          << (res.region.form == RegionForm::Le ? res.region.tau1 : 0.0) << " action "
          << res.action << " (want LE, |tau|<=0.1, action 1)";
  out.details = details.str();
  return out;
}

// --------------------------------------------------------------------------
// Property suites.
// --------------------------------------------------------------------------

Outcome property_suites() {
  int failures = 0;
  std::ostringstream log;

  // Piecewise constancy between order statistics.
  for (std::uint64_t seed = 50; seed < 60; ++seed) {
    const PanelSetup setup = random_panel(seed, 80, 1, 1);
    std::vector<double> values;
    for (Eigen::Index i = 0; i < setup.panel.n(); ++i)
      if (setup.panel.active[static_cast<std::size_t>(i)]) values.push_back(setup.panel.X(i, 0));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double mid = 0.5 * (values[k] + values[k + 1]);
      if (objective_eval(setup.panel, Region::le(0, mid), 0, 0.0) !=
          objective_eval(setup.panel, Region::le(0, values[k]), 0, 0.0))
        ++failures;
    }
  }
  log << "piecewise";

  // Rank invariance under increasing transforms.
  for (std::uint64_t seed = 2000; seed < 2030; ++seed) {
    const PanelSetup setup = random_panel(seed, 120, 4, 2);
    const std::vector<int> cols = all_columns(setup.panel.dim());
    const ClauseResult before = best_clause(setup.panel, setup.eta, cols);
    Eigen::MatrixXd Xt = setup.panel.X;
    for (Eigen::Index i = 0; i < Xt.size(); ++i) Xt(i) = 2.0 * Xt(i) + Xt(i) * Xt(i) * Xt(i);
    WeightPanel tp = WeightPanel::make(Xt, setup.panel.weights, setup.panel.active);
    const ClauseResult after = best_clause(tp, setup.eta, cols);
    if (after.action != before.action || after.covered != before.covered ||
        std::abs(after.objective - before.objective) > 1e-9 ||
        covered_rows(tp, after.region) != covered_rows(setup.panel, before.region))
      ++failures;
  }
  log << ", rank-invariance";

  // Prefix tree equals direct prefix scans (capacity <= 16, exhaustive order).
  {
    std::mt19937_64 rng(4141);
    for (int cap = 1; cap <= 16; ++cap) {
      for (int rep = 0; rep < 30; ++rep) {
        PrefixTree tree(static_cast<std::size_t>(cap));
        std::vector<double> leaf(static_cast<std::size_t>(cap), 0.0);
        std::vector<long> cnt(static_cast<std::size_t>(cap), 0);
        const int inserts = 1 + static_cast<int>(rng() % (3 * cap));
        for (int k = 0; k < inserts; ++k) {
          const auto rank = static_cast<std::size_t>(rng() % cap);
          const double u = static_cast<double>(static_cast<int>(rng() % 9) - 4);
          tree.insert(rank, u);
          leaf[rank] += u;
          cnt[rank] += 1;
          double run = 0.0, best = std::numeric_limits<double>::infinity();
          for (int r = 0; r < cap; ++r) {
            run += leaf[static_cast<std::size_t>(r)];
            if (cnt[static_cast<std::size_t>(r)] > 0) best = std::min(best, run);
          }
          if (!tree.best().any || std::abs(tree.best().sum - best) > 1e-12) ++failures;
        }
      }
    }
  }
  log << ", tree-prefix";

  // Reflection symmetry: negating a column only swaps the cut directions.
  for (std::uint64_t seed = 3000; seed < 3030; ++seed) {
    const PanelSetup setup = random_panel(seed, 100, 3, 2);
    const std::vector<int> cols = all_columns(setup.panel.dim());
    const ClauseResult before = best_clause(setup.panel, setup.eta, cols);
    Eigen::MatrixXd Xn = setup.panel.X;
    Xn.col(0) = -Xn.col(0);
    WeightPanel np = WeightPanel::make(Xn, setup.panel.weights, setup.panel.active);
    const ClauseResult after = best_clause(np, setup.eta, cols);
    if (std::abs(after.objective - before.objective) > 1e-9 ||
        after.covered != before.covered ||
        covered_rows(np, after.region) != covered_rows(setup.panel, before.region))
      ++failures;
  }
  log << ", reflection";

  // List termination and strict coverage shrinkage.
  {
    std::mt19937_64 rng(5151);
    std::normal_distribution<double> draw(0.0, 1.0);
    for (int rep = 0; rep < 25; ++rep) {
      const int n = 50;
      Eigen::MatrixXd X(n, 3);
      Eigen::MatrixXd Q(n, 2);
      for (Eigen::Index i = 0; i < X.size(); ++i) X(i) = draw(rng);
      for (Eigen::Index i = 0; i < Q.size(); ++i) Q(i) = draw(rng);
      const int lmax = 1 + static_cast<int>(rng() % 6);
      const BuildResult res = build_decision_list(X, Q, 1, 0.05, 0.01, lmax, all_columns(3));
      if (static_cast<int>(res.list.clauses.size()) > lmax) ++failures;
      if (res.list.clauses.back().region.form != RegionForm::All) ++failures;
      for (std::size_t k = 0; k + 1 < res.clauses.size(); ++k)
        if (res.clauses[k].covered < 1) ++failures;
    }
  }
  log << ", list-shape";

  // Serialization round-trip on random regimes.
  {
    std::mt19937_64 rng(6161);
    std::uniform_real_distribution<double> tau(-3.0, 3.0);
    for (int rep = 0; rep < 50; ++rep) {
      Regime regime;
      std::vector<std::vector<std::string>> labels;
      const int T = 1 + static_cast<int>(rng() % 3);
      for (int t = 1; t <= T; ++t) {
        DecisionList list;
        list.stage = t;
        const int L = 1 + static_cast<int>(rng() % 4);
        for (int l = 0; l + 1 < L; ++l) {
          if (rng() % 2 == 0)
            list.clauses.push_back(Clause{Region::le(static_cast<int>(rng() % 4), tau(rng)),
                                          static_cast<int>(rng() % 3)});
          else
            list.clauses.push_back(
                Clause{Region::pair(RegionForm::GtLe, 0, tau(rng), 2, tau(rng)),
                       static_cast<int>(rng() % 3)});
        }
        list.clauses.push_back(Clause{Region::all(), static_cast<int>(rng() % 3)});
        regime.stages.push_back(list);
        labels.push_back({"x", "y", "z"});
      }
      const std::string text = serialize_regime(regime, labels);
      const ParsedRegime parsed = deserialize_regime(text);
      if (serialize_regime(parsed.regime, parsed.action_labels) != text) ++failures;
    }
  }
  log << ", round-trip";

  Outcome out;
  out.pass = failures == 0;
  out.details = log.str() + "; " + std::to_string(failures) + " failures";
  return out;
}

// --------------------------------------------------------------------------
// Benchmark reproduction at desk scale.
// --------------------------------------------------------------------------

FitConfig bench_config() {
  FitConfig cfg;
  cfg.threads = 2;
  cfg.krr.starts = 2;
  cfg.krr.sweeps = 12;
  cfg.list.zeta_grid = {0.01, 0.1};
  cfg.list.eta_grid = {0.001, 0.01};
  cfg.list.folds = 5;
  cfg.list.max_clauses = 10;
  return cfg;
}

void append_bench_row(const std::string& row) {
  std::ofstream out("acceptance_bench.csv", std::ios::app);
  out << row << "\n";
}

Outcome bench_criterion(ScenarioId id, int n, int reps, int n_test,
                        const std::function<bool(double)>& band,
                        const std::string& band_text, std::uint64_t seed) {
  const ValueReport report = run_benchmark(id, n, reps, bench_config(), n_test, seed);
  const std::string row = benchmark_csv_row(id, n, report);
  append_bench_row(row);
  Outcome out;
  out.pass = report.failures == 0 && band(report.mean_value);
  std::ostringstream details;
  details << row << " | want " << band_text;
  if (report.failures > 0) details << " | " << report.failures << " failed replications";
  out.details = details.str();
  return out;
}

Outcome scenario3_eval() {
  const double v = monte_carlo_value(ScenarioId::III, scenario3_optimal_regime(), 100000, 33);
  Outcome out;
  out.pass = std::abs(v - 20.0) <= 0.05;
  out.details = "optimal-rule value " + format_double(v) + " (want 20 +- 0.05)";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> filters;
  for (int i = 1; i < argc; ++i) filters.emplace_back(argv[i]);
  Harness h(std::move(filters));

  {
    std::ofstream reset("acceptance_bench.csv");
    reset << kBenchmarkCsvHeader << "\n";
  }

  h.run("oracle_equivalence", oracle_equivalence);
  h.run("search_scaling", search_scaling);
  h.run("krr_identities", krr_identities);
  h.run("zero_threshold_recovery", zero_threshold_recovery);
  h.run("property_suites", property_suites);
  h.run("scenario_III_optimal_eval", scenario3_eval);

  h.run("bench_scenario_I_n400", [] {
    return bench_criterion(ScenarioId::I, 400, 100, 100000,
                           [](double v) { return v >= 6.8 && v >= 6.75; },
                           ">=6.8 and above the 6.70 plateau by 0.05", 101);
  });
  h.run("bench_scenario_II_n400", [] {
    return bench_criterion(ScenarioId::II, 400, 100, 100000,
                           [](double v) { return v >= 3.63 && v <= 3.83; }, "in [3.63, 3.83]",
                           102);
  });
  h.run("bench_scenario_III_n200", [] {
    return bench_criterion(ScenarioId::III, 200, 100, 100000,
                           [](double v) { return v >= 16.0; }, ">=16.0", 103);
  });
  h.run("bench_scenario_IV_n400", [] {
    return bench_criterion(ScenarioId::IV, 400, 100, 100000,
                           [](double v) { return v >= 17.5; }, ">=17.5", 104);
  });
  h.run("bench_scenario_V_n100", [] {
    return bench_criterion(ScenarioId::V, 100, 25, 20000,
                           [](double v) { return v >= 21.0; }, ">=21.0", 105);
  });

  return h.finish();
}
