#include "dtr/scenarios.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace dtr {

namespace {

constexpr std::uint64_t kTagTrajectory = 0x7472616a;
constexpr std::uint64_t kTagReplicationData = 0x72657064;
constexpr std::uint64_t kTagReplicationFit = 0x72657066;
constexpr std::uint64_t kTagReplicationEval = 0x72657065;

using Rng = std::mt19937_64;

double draw_normal(Rng& rng, double mean, double sd) {
  std::normal_distribution<double> d(mean, sd);
  return d(rng);
}

int draw_uniform_int(Rng& rng, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  return d(rng);
}

double draw_uniform(Rng& rng) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  return d(rng);
}

// Policy callback: stage (1-based) and the history row; returns the action
// index. Null means draw observational actions.
using PolicyFn = std::function<int(int, const Eigen::VectorXd&)>;

struct StageRecord {
  std::vector<double> covariates;
  int action = 0;
  double reward = 0.0;
};

struct ScenarioLayout {
  int stage_count;
  std::vector<int> covariate_counts;
};

ScenarioLayout layout(ScenarioId id) {
  switch (id) {
    case ScenarioId::I: return {2, {50, 0}};
    case ScenarioId::II: return {2, {50, 2}};
    case ScenarioId::III: return {3, {3, 1, 1}};
    case ScenarioId::IV: return {3, {50, 1, 1}};
    case ScenarioId::V: return {10, std::vector<int>(10, 1)};
  }
  fail("bad_scenario", "unknown scenario");
}

// Scenario V action combinations in index order.
constexpr int kPairFirst[7] = {0, 0, 0, 0, 1, 1, 1};
constexpr int kPairSecond[7] = {0, 1, 2, 3, 1, 2, 3};

int pair_action_index(int a1, int a2) {
  for (int k = 0; k < 7; ++k)
    if (kPairFirst[k] == a1 && kPairSecond[k] == a2) return k;
  fail("bad_scenario", "invalid treatment pair");
}

// Simulates one trajectory; appends each stage's covariates to `x` so the
// policy always sees the running history (prior covariates, action indices
// and rewards) encoded exactly like TrajectoryDataset.
std::vector<StageRecord> simulate_trajectory(ScenarioId id, Rng& rng, const PolicyFn& policy) {
  const ScenarioLayout lay = layout(id);
  std::vector<StageRecord> rec(static_cast<std::size_t>(lay.stage_count));
  std::vector<double> x;  // running history

  auto choose = [&](int t, int m) -> int {
    if (!policy) return draw_uniform_int(rng, 0, m - 1);
    Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    return policy(t, xv);
  };
  auto push_stage = [&](int t, const StageRecord& r) {
    if (t > 1) {
      x.push_back(static_cast<double>(rec[static_cast<std::size_t>(t - 2)].action));
      x.push_back(rec[static_cast<std::size_t>(t - 2)].reward);
    }
    x.insert(x.end(), r.covariates.begin(), r.covariates.end());
  };

  switch (id) {
    case ScenarioId::I: {
      StageRecord& s1 = rec[0];
      s1.covariates.resize(50);
      for (double& v : s1.covariates) v = draw_normal(rng, 0.0, 1.0);
      push_stage(1, s1);
      s1.action = choose(1, 2);
      const double a1 = s1.action == 0 ? -1.0 : 1.0;
      s1.reward = draw_normal(rng, 0.5 * s1.covariates[2] * a1, 1.0);

      StageRecord& s2 = rec[1];
      push_stage(2, s2);
      s2.action = choose(2, 2);
      const double a2 = s2.action == 0 ? -1.0 : 1.0;
      const double q = s1.covariates[0] * s1.covariates[0] + s1.covariates[1] * s1.covariates[1];
      const double mu2 = ((q - 0.2) * (0.5 - q) + s1.reward) * a2;
      s2.reward = draw_normal(rng, mu2, 1.0);
      break;
    }
    case ScenarioId::II: {
      StageRecord& s1 = rec[0];
      s1.covariates.resize(50);
      for (double& v : s1.covariates) v = draw_normal(rng, 0.0, 1.0);
      push_stage(1, s1);
      s1.action = choose(1, 2);
      const double a1 = s1.action == 0 ? -1.0 : 1.0;
      s1.reward = draw_normal(rng, (1.0 + 1.5 * s1.covariates[2]) * a1, 1.0);

      StageRecord& s2 = rec[1];
      s2.covariates.resize(2);
      s2.covariates[0] = draw_uniform(rng) < 1.0 - normal_cdf(1.25 * s1.covariates[0] * a1) ? 1.0 : 0.0;
      s2.covariates[1] = draw_uniform(rng) < 1.0 - normal_cdf(-1.75 * s1.covariates[1] * a1) ? 1.0 : 0.0;
      push_stage(2, s2);
      s2.action = choose(2, 2);
      const double a2 = s2.action == 0 ? -1.0 : 1.0;
      const double mu2 = (0.5 + s1.reward + 0.5 * a1 + 0.5 * s2.covariates[0] -
                          0.5 * s2.covariates[1]) *
                         a2;
      s2.reward = draw_normal(rng, mu2, 1.0);
      break;
    }
    case ScenarioId::III:
    case ScenarioId::IV: {
      const int p1 = id == ScenarioId::III ? 3 : 50;
      StageRecord& s1 = rec[0];
      s1.covariates.resize(static_cast<std::size_t>(p1));
      for (double& v : s1.covariates) v = draw_normal(rng, 45.0, 15.0);
      push_stage(1, s1);
      s1.action = choose(1, 2);
      s1.reward = 0.0;

      StageRecord& s2 = rec[1];
      s2.covariates.resize(1);
      s2.covariates[0] = draw_normal(rng, 1.5 * s1.covariates[0], 10.0);
      push_stage(2, s2);
      s2.action = choose(2, 2);
      s2.reward = 0.0;

      StageRecord& s3 = rec[2];
      s3.covariates.resize(1);
      s3.covariates[0] = draw_normal(rng, 0.5 * s2.covariates[0], 10.0);
      push_stage(3, s3);
      s3.action = choose(3, 2);
      const double a1 = s1.action == 0 ? -1.0 : 1.0;
      const double a2 = s2.action == 0 ? -1.0 : 1.0;
      const double a3 = s3.action == 0 ? -1.0 : 1.0;
      auto sq = [](double v) { return v * v; };
      const double mu3 =
          20.0 -
          std::abs(0.6 * s1.covariates[0] - 40.0) *
              sq((a1 > 0.0 ? 1.0 : 0.0) - (s1.covariates[0] > 30.0 ? 1.0 : 0.0)) -
          std::abs(0.8 * s2.covariates[0] - 60.0) *
              sq((a2 > 0.0 ? 1.0 : 0.0) - (s2.covariates[0] > 40.0 ? 1.0 : 0.0)) -
          std::abs(1.4 * s3.covariates[0] - 40.0) *
              sq((a3 > 0.0 ? 1.0 : 0.0) - (s3.covariates[0] > 40.0 ? 1.0 : 0.0));
      s3.reward = draw_normal(rng, mu3, 1.0);
      break;
    }
    case ScenarioId::V: {
      double s_prev = 0.0;
      for (int t = 1; t <= 10; ++t) {
        StageRecord& r = rec[static_cast<std::size_t>(t - 1)];
        const double u = draw_normal(rng, 0.0, 0.1);
        double s;
        if (t == 1) {
          s = 0.5 + u;
        } else {
          const StageRecord& prev = rec[static_cast<std::size_t>(t - 2)];
          const double p1 = kPairFirst[prev.action];
          const double p2 = kPairSecond[prev.action];
          s = 0.5 + 0.2 * s_prev - 0.07 * p1 * p2 - 0.01 * (1.0 - p1) * p2 + u;
        }
        r.covariates.assign(1, s);
        push_stage(t, r);
        if (policy) {
          r.action = choose(t, 7);
        } else {
          const int a1 = draw_uniform_int(rng, 0, 1);
          const int a2 = a1 == 0 ? draw_uniform_int(rng, 0, 3) : draw_uniform_int(rng, 1, 3);
          r.action = pair_action_index(a1, a2);
        }
        const double a1 = kPairFirst[r.action];
        const double a2 = kPairSecond[r.action];
        auto sq = [](double v) { return v * v; };
        const double mu = 30.0 * (t == 1 ? 1.0 : 0.0) - 5.0 * u -
                          6.0 * sq(a1 - (s > 5.0 / 9.0 ? 1.0 : 0.0)) -
                          1.5 * a1 * sq(a2 - 2.0 * s) - 1.5 * (1.0 - a1) * sq(a2 - 5.5 * s);
        r.reward = draw_normal(rng, mu, 0.8);
        s_prev = s;
      }
      break;
    }
  }
  return rec;
}

std::vector<std::string> covariate_names(ScenarioId id, int t) {
  const ScenarioLayout lay = layout(id);
  const int p = lay.covariate_counts[static_cast<std::size_t>(t - 1)];
  std::vector<std::string> names;
  if (p == 1) {
    names.push_back("s" + std::to_string(t));
  } else {
    for (int k = 1; k <= p; ++k)
      names.push_back("s" + std::to_string(t) + "_" + std::to_string(k));
  }
  return names;
}

}  // namespace

const char* scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::I: return "I";
    case ScenarioId::II: return "II";
    case ScenarioId::III: return "III";
    case ScenarioId::IV: return "IV";
    case ScenarioId::V: return "V";
  }
  return "?";
}

ScenarioId scenario_from_name(const std::string& name) {
  if (name == "I" || name == "1") return ScenarioId::I;
  if (name == "II" || name == "2") return ScenarioId::II;
  if (name == "III" || name == "3") return ScenarioId::III;
  if (name == "IV" || name == "4") return ScenarioId::IV;
  if (name == "V" || name == "5") return ScenarioId::V;
  fail("bad_scenario", "unknown scenario '" + name + "' (expected I..V)");
}

int scenario_stage_count(ScenarioId id) { return layout(id).stage_count; }

std::vector<std::string> scenario_action_labels(ScenarioId id, int) {
  if (id == ScenarioId::V) {
    std::vector<std::string> labels;
    for (int k = 0; k < 7; ++k)
      labels.push_back(std::to_string(kPairFirst[k]) + "_" + std::to_string(kPairSecond[k]));
    return labels;
  }
  return {"-1", "1"};
}

std::vector<std::vector<std::string>> scenario_action_label_table(ScenarioId id) {
  std::vector<std::vector<std::string>> table;
  for (int t = 1; t <= scenario_stage_count(id); ++t)
    table.push_back(scenario_action_labels(id, t));
  return table;
}

double normal_cdf(double x) {
  // Abramowitz & Stegun 26.2.17.
  const double ax = std::abs(x);
  const double t = 1.0 / (1.0 + 0.2316419 * ax);
  const double poly =
      t * (0.319381530 +
           t * (-0.356563782 + t * (1.781477937 + t * (-1.821255978 + t * 1.330274429))));
  const double pdf = std::exp(-0.5 * ax * ax) / std::sqrt(2.0 * M_PI);
  const double upper = pdf * poly;
  return x >= 0.0 ? 1.0 - upper : upper;
}

TrajectoryDataset generate(const ScenarioSpec& spec) {
  if (spec.n < 0) fail("bad_scenario", "negative sample size");
  const ScenarioLayout lay = layout(spec.id);
  std::vector<StageData> stages(static_cast<std::size_t>(lay.stage_count));
  for (int t = 1; t <= lay.stage_count; ++t) {
    StageData& st = stages[static_cast<std::size_t>(t - 1)];
    st.covariates.resize(spec.n, lay.covariate_counts[static_cast<std::size_t>(t - 1)]);
    st.covariate_names = covariate_names(spec.id, t);
    st.action_labels = scenario_action_labels(spec.id, t);
    st.actions.resize(static_cast<std::size_t>(spec.n));
    st.rewards.resize(spec.n);
  }
  for (int i = 0; i < spec.n; ++i) {
    Rng rng(derive_seed(spec.seed, kTagTrajectory, static_cast<std::uint64_t>(i)));
    const std::vector<StageRecord> rec = simulate_trajectory(spec.id, rng, nullptr);
    for (int t = 1; t <= lay.stage_count; ++t) {
      const StageRecord& r = rec[static_cast<std::size_t>(t - 1)];
      StageData& st = stages[static_cast<std::size_t>(t - 1)];
      for (std::size_t j = 0; j < r.covariates.size(); ++j)
        st.covariates(i, static_cast<Eigen::Index>(j)) = r.covariates[j];
      st.actions[static_cast<std::size_t>(i)] = r.action;
      st.rewards(i) = r.reward;
    }
  }
  return TrajectoryDataset(std::move(stages));
}

double monte_carlo_value(ScenarioId id, const Regime& regime, int n_test, std::uint64_t seed,
                         int threads) {
  if (static_cast<int>(regime.stages.size()) != scenario_stage_count(id))
    fail("stage_mismatch", "regime has " + std::to_string(regime.stages.size()) +
                               " stages but scenario " + scenario_name(id) + " has " +
                               std::to_string(scenario_stage_count(id)));
  validate_regime(regime);
  if (n_test < 1) fail("bad_scenario", "test set size must be positive");

  PolicyFn policy = [&regime](int t, const Eigen::VectorXd& x) {
    return apply_list(regime.stages[static_cast<std::size_t>(t - 1)], x);
  };

  const int chunk = 4096;
  const int chunks = (n_test + chunk - 1) / chunk;
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
  parallel_for(static_cast<std::size_t>(chunks), threads, [&](std::size_t c) {
    KahanSum sum;
    const int lo = static_cast<int>(c) * chunk;
    const int hi = std::min(n_test, lo + chunk);
    for (int i = lo; i < hi; ++i) {
      Rng rng(derive_seed(seed, kTagTrajectory, static_cast<std::uint64_t>(i)));
      const std::vector<StageRecord> rec = simulate_trajectory(id, rng, policy);
      double total = 0.0;
      for (const StageRecord& r : rec) total += r.reward;
      sum.add(total);
    }
    partial[c] = sum.value();
  });
  KahanSum total;
  for (double p : partial) total.add(p);
  return total.value() / static_cast<double>(n_test);
}

Regime scenario3_optimal_regime() {
  // Stage histories: x1 = (s1_1, s1_2, s1_3); x2 appends (a1, y1, s2); x3
  // appends (a2, y2, s3). Treat "1" (index 1) when the matching covariate
  // exceeds its threshold.
  Regime regime;
  DecisionList l1{1, {Clause{Region::gt(0, 30.0), 1}, Clause{Region::all(), 0}}};
  DecisionList l2{2, {Clause{Region::gt(5, 40.0), 1}, Clause{Region::all(), 0}}};
  DecisionList l3{3, {Clause{Region::gt(8, 40.0), 1}, Clause{Region::all(), 0}}};
  regime.stages = {l1, l2, l3};
  return regime;
}

std::string benchmark_csv_row(ScenarioId id, int n, const ValueReport& report) {
  std::ostringstream row;
  row << scenario_name(id) << ',' << n << ',' << report.replications << ','
      << format_double(report.mean_value) << ',' << format_double(report.sd_value) << ','
      << format_double(report.runtime_seconds);
  return row.str();
}

ValueReport run_benchmark(ScenarioId id, int n, int replications, const FitConfig& config,
                          int n_test, std::uint64_t seed) {
  if (replications < 1) fail("bad_scenario", "need at least one replication");
  const auto start = std::chrono::steady_clock::now();

  std::vector<double> values(static_cast<std::size_t>(replications), 0.0);
  std::vector<std::uint8_t> failed(static_cast<std::size_t>(replications), 0);
  std::vector<std::string> errors(static_cast<std::size_t>(replications));

  FitConfig rep_config = config;
  if (replications > 1) rep_config.threads = 1;

  parallel_for(static_cast<std::size_t>(replications), config.threads, [&](std::size_t r) {
    try {
      ScenarioSpec spec{id, n, derive_seed(seed, kTagReplicationData, r)};
      TrajectoryDataset data = generate(spec);
      FitConfig fc = rep_config;
      fc.seed = derive_seed(seed, kTagReplicationFit, r);
      RegimeFit fit = fit_regime(data, fc);
      values[r] = monte_carlo_value(id, fit.regime, n_test,
                                    derive_seed(seed, kTagReplicationEval, r), 1);
    } catch (const std::exception& e) {
      failed[r] = 1;
      errors[r] = e.what();
    }
  });

  ValueReport report;
  report.n_test = n_test;
  KahanSum sum;
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (failed[r]) {
      ++report.failures;
      continue;
    }
    report.values.push_back(values[r]);
    sum.add(values[r]);
  }
  report.replications = static_cast<int>(report.values.size());
  if (report.replications > 0) {
    report.mean_value = sum.value() / report.replications;
    if (report.replications > 1) {
      KahanSum sq;
      for (double v : report.values) sq.add((v - report.mean_value) * (v - report.mean_value));
      report.sd_value = std::sqrt(sq.value() / (report.replications - 1));
    }
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace dtr
