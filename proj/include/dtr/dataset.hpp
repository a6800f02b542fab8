#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dtr/common.hpp"

namespace dtr {

/// Raw per-stage observations: covariates measured at stage entry, the action
/// actually taken (index into `action_labels`) and the end-of-stage reward.
struct StageData {
  Eigen::MatrixXd covariates;  // n x p_t (p_t may be 0)
  std::vector<std::string> covariate_names;
  std::vector<int> actions;  // n entries in [0, action_labels.size())
  std::vector<std::string> action_labels;
  Eigen::VectorXd rewards;  // n
};

/// n i.i.d. multi-stage trajectories plus the materialized history matrices.
/// The stage-t history X_t is what a decision maker knows entering stage t:
///   X_1 = S_1,   X_t = (X_{t-1}, action index at t-1, reward at t-1, S_t)
/// so dim(X_t) = sum_{s<=t} p_s + 2(t-1).
class TrajectoryDataset {
 public:
  /// `ids` are stable subject keys used for cross-validation folds; they
  /// default to 0..n-1. Validates shapes and action ranges.
  explicit TrajectoryDataset(std::vector<StageData> stages, std::vector<long> ids = {});

  int n() const { return n_; }
  int stage_count() const { return static_cast<int>(stages_.size()); }

  /// Stages are 1-based throughout, matching the regime document format.
  const StageData& stage(int t) const { return stages_.at(check_t(t) - 1); }
  const Eigen::MatrixXd& history(int t) const { return history_.at(check_t(t) - 1); }
  const std::vector<std::string>& history_names(int t) const {
    return history_names_.at(check_t(t) - 1);
  }
  int history_dim(int t) const { return static_cast<int>(history(t).cols()); }
  int action_count(int t) const { return static_cast<int>(stage(t).action_labels.size()); }

  const std::vector<long>& ids() const { return ids_; }

 private:
  int check_t(int t) const {
    if (t < 1 || t > stage_count())
      fail("bad_stage", "stage " + std::to_string(t) + " out of range 1.." +
                            std::to_string(stage_count()));
    return t;
  }

  int n_ = 0;
  std::vector<StageData> stages_;
  std::vector<long> ids_;
  std::vector<Eigen::MatrixXd> history_;
  std::vector<std::vector<std::string>> history_names_;
};

}  // namespace dtr
