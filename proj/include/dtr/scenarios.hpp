#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include "dtr/dataset.hpp"
#include "dtr/decision_list.hpp"
#include "dtr/pipeline.hpp"

namespace dtr {

/// The five benchmark generative models: two-stage nonlinear (I), two-stage
/// with time-varying binary covariates (II), a three-stage chain (III), the
/// same chain plus 47 noise covariates (IV), and a ten-stage model with
/// paired treatments, seven combinations per stage (V).
enum class ScenarioId { I, II, III, IV, V };

const char* scenario_name(ScenarioId id);
ScenarioId scenario_from_name(const std::string& name);

struct ScenarioSpec {
  ScenarioId id = ScenarioId::I;
  int n = 0;
  std::uint64_t seed = 0;
};

int scenario_stage_count(ScenarioId id);
std::vector<std::string> scenario_action_labels(ScenarioId id, int t);

/// Standard normal CDF via the Abramowitz-Stegun 26.2.17 rational
/// approximation (|error| < 7.5e-8); keeps scenario draws platform-stable.
double normal_cdf(double x);

/// Draws n observational trajectories (actions uniform as specified by the
/// scenario). Bit-identical for identical (spec, seed).
TrajectoryDataset generate(const ScenarioSpec& spec);

/// Mean total outcome over n_test fresh trajectories that follow the regime
/// at every stage. Throws Error("stage_mismatch") if the regime's stage count
/// differs from the scenario's.
double monte_carlo_value(ScenarioId id, const Regime& regime, int n_test, std::uint64_t seed,
                         int threads = 1);

/// The known-optimal rule for Scenario III (sign thresholds at 30/40/40);
/// useful as an evaluation reference.
Regime scenario3_optimal_regime();
std::vector<std::vector<std::string>> scenario_action_label_table(ScenarioId id);

struct ValueReport {
  double mean_value = 0.0;
  double sd_value = 0.0;
  int replications = 0;
  int n_test = 0;
  double runtime_seconds = 0.0;
  int failures = 0;
  std::vector<double> values;  // per successful replication
};

inline constexpr const char* kBenchmarkCsvHeader =
    "scenario,n,replications,mean_value,sd_value,runtime_seconds";

std::string benchmark_csv_row(ScenarioId id, int n, const ValueReport& report);

/// replications x (generate -> fit_regime -> monte_carlo_value); aggregates
/// with compensated sums so the result does not depend on scheduling.
/// Replication failures are recorded in the report, never dropped silently.
ValueReport run_benchmark(ScenarioId id, int n, int replications, const FitConfig& config,
                          int n_test, std::uint64_t seed);

}  // namespace dtr
