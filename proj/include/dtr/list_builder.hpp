#pragma once

#include <functional>
#include <optional>

#include "dtr/clause_search.hpp"
#include "dtr/decision_list.hpp"
#include "dtr/kernel_ridge.hpp"

namespace dtr {

/// Knobs for greedy list construction and the zeta/eta cross-validation.
/// Grid entries are multipliers of the stage's response scale (its sample
/// standard deviation); the pipeline converts them to absolute penalties.
struct ListConfig {
  double zeta = 0.0;  // mass bonus per covered subject
  double eta = 0.0;   // bonus per unused region variable
  int max_clauses = 10;
  std::vector<double> zeta_grid{0.0, 0.01, 0.05, 0.1, 0.5};
  std::vector<double> eta_grid{0.0, 0.001, 0.01, 0.1};
  int folds = 5;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Greedy Q-rule: the action with the largest predicted value, lowest index
/// on ties.
int pi_q(const std::vector<KrrModel>& models, const Eigen::Ref<const Eigen::VectorXd>& x);
int argmax_action(const Eigen::Ref<const Eigen::RowVectorXd>& q_row);

/// Advantage weights U_{ia} = [max_b Q(i,b) - Q(i,a) - zeta] for active
/// subjects, zero otherwise. Q is the n x m matrix of predicted values.
WeightPanel compute_weights(const Eigen::MatrixXd& q_values,
                            const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const std::vector<std::uint8_t>& active, double zeta,
                            std::vector<long> keys = {});
WeightPanel compute_weights(const std::vector<KrrModel>& models,
                            const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const std::vector<std::uint8_t>& active, double zeta,
                            std::vector<long> keys = {});

struct BuiltClause {
  Region region;
  int action = 0;
  double objective = 0.0;
  long covered = 0;  // active subjects taken by this clause during the build
};

struct BuildResult {
  DecisionList list;
  std::vector<BuiltClause> clauses;
};

/// Greedy construction: repeatedly take the best clause on the still
/// uncovered subjects, stopping at a whole-space clause; at the length cap
/// the final clause is forced to the whole space with the best single action
/// for the remainder. `usable` masks actions that may be recommended (all by
/// default); clause actions in the result refer to the full action indexing.
BuildResult build_decision_list(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::MatrixXd& q_values, int stage, double zeta,
                                double eta, int max_clauses, const std::vector<int>& columns,
                                const std::vector<long>& keys = {},
                                const std::vector<std::uint8_t>& usable = {});

/// Training slice for one stage: rows, per-row action indices and responses.
struct StageSlice {
  Eigen::Ref<const Eigen::MatrixXd> X;
  const std::vector<int>& actions;
  Eigen::Ref<const Eigen::VectorXd> responses;
  int action_count;
  const std::vector<long>& ids;
};

/// Fits one (action cell) regression on a training subset; returns nothing
/// when the cell is empty in that subset.
using CellFitFactory = std::function<std::optional<KrrModel>(
    const Eigen::MatrixXd& cell_x, const Eigen::VectorXd& cell_y, int action)>;

struct ZetaEtaResult {
  double zeta = 0.0;
  double eta = 0.0;
  double score = 0.0;  // cross-validated plug-in value at the winner
  std::vector<std::pair<double, double>> grid;  // evaluated (zeta, eta) points
  std::vector<double> grid_scores;
};

/// K-fold search over the zeta x eta grid (absolute penalties here): builds
/// lists on each training fold and scores the held-out plug-in value using
/// the training-fold Q-models. Folds are keyed to subject ids. Ties go to the
/// smaller zeta, then the smaller eta.
ZetaEtaResult tune_zeta_eta(const StageSlice& slice, const CellFitFactory& factory,
                            const std::vector<double>& zeta_grid,
                            const std::vector<double>& eta_grid, int folds, int max_clauses,
                            const std::vector<int>& columns, std::uint64_t seed, int threads);

}  // namespace dtr
