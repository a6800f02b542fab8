#pragma once

#include <optional>

#include "dtr/dataset.hpp"
#include "dtr/decision_list.hpp"
#include "dtr/kernel_ridge.hpp"
#include "dtr/list_builder.hpp"

namespace dtr {

struct FitConfig {
  KrrTuneConfig krr;
  ListConfig list;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Everything fitted for one stage: per-action value models, the decision
/// list, tuned penalties and diagnostics.
struct StageFit {
  int stage = 1;
  std::vector<KrrModel> models;           // one per action
  std::vector<KrrTuneResult> tuning;      // per action (objective/evals/degenerate)
  std::vector<long> cell_sizes;           // n_{ta}
  std::vector<std::uint8_t> default_params_used;  // singleton cells skip tuning
  DecisionList list;
  std::vector<BuiltClause> clause_diag;
  double zeta = 0.0;
  double eta = 0.0;
  double response_scale = 1.0;  // sample SD of the stage response
  double clip_bound = 1.0;      // B used for every model of the stage
  double plugin_value = 0.0;    // mean predicted value of the list in sample
};

/// Fits the stage-t value models and decision list. For the final stage the
/// response is the stage reward; earlier stages regress the reward plus the
/// continuation value passed in `next_pseudo`. An empty action cell is a
/// positivity violation and throws Error("positivity", ...) naming the
/// action; singleton cells are fitted with default scales and flagged.
StageFit fit_stage(const TrajectoryDataset& data, int t,
                   const std::optional<Eigen::VectorXd>& next_pseudo, const FitConfig& config);

/// Continuation-adjusted responses for stage t: the stage reward plus the
/// fitted stage-(t+1) value at the action its list recommends.
Eigen::VectorXd pseudo_outcomes(const TrajectoryDataset& data, int t, const StageFit& next_fit);

struct RegimeFit {
  Regime regime;
  std::vector<StageFit> stages;  // index 0 is stage 1
  std::vector<std::vector<std::string>> action_labels;
};

/// Backward recursion over stages T..1. Deterministic given (data, config).
RegimeFit fit_regime(const TrajectoryDataset& data, const FitConfig& config);

/// Per-stage diagnostics as a JSON document (cell sizes, tuned penalties,
/// list shapes, plug-in values).
std::string fit_report_json(const RegimeFit& fit);

}  // namespace dtr
