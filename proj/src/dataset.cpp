#include "dtr/dataset.hpp"

#include <cmath>

namespace dtr {

TrajectoryDataset::TrajectoryDataset(std::vector<StageData> stages, std::vector<long> ids)
    : stages_(std::move(stages)), ids_(std::move(ids)) {
  if (stages_.empty()) fail("bad_dataset", "dataset needs at least one stage");
  n_ = static_cast<int>(stages_.front().covariates.rows());
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const StageData& st = stages_[s];
    const std::string at = "stage " + std::to_string(s + 1);
    if (st.covariates.rows() != n_) fail("bad_dataset", at + ": covariate row count mismatch");
    if (static_cast<Eigen::Index>(st.covariate_names.size()) != st.covariates.cols())
      fail("bad_dataset", at + ": covariate name count mismatch");
    if (static_cast<int>(st.actions.size()) != n_)
      fail("bad_dataset", at + ": action column length mismatch");
    if (st.rewards.size() != n_) fail("bad_dataset", at + ": reward column length mismatch");
    if (st.action_labels.empty()) fail("bad_dataset", at + ": empty action set");
    const int m = static_cast<int>(st.action_labels.size());
    for (int a : st.actions) {
      if (a < 0 || a >= m)
        fail("bad_dataset", at + ": action index " + std::to_string(a) +
                                " outside the action set of size " + std::to_string(m));
    }
    if (!st.covariates.allFinite()) fail("bad_dataset", at + ": non-finite covariate");
    if (!st.rewards.allFinite()) fail("bad_dataset", at + ": non-finite reward");
  }
  if (ids_.empty()) {
    ids_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) ids_[static_cast<std::size_t>(i)] = i;
  } else if (static_cast<int>(ids_.size()) != n_) {
    fail("bad_dataset", "id column length mismatch");
  }

  history_.reserve(stages_.size());
  history_names_.reserve(stages_.size());
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    const StageData& st = stages_[s];
    if (s == 0) {
      history_.push_back(st.covariates);
      history_names_.push_back(st.covariate_names);
      continue;
    }
    const Eigen::MatrixXd& prev = history_[s - 1];
    const StageData& prev_stage = stages_[s - 1];
    Eigen::MatrixXd x(n_, prev.cols() + 2 + st.covariates.cols());
    x.leftCols(prev.cols()) = prev;
    for (int i = 0; i < n_; ++i)
      x(i, prev.cols()) = static_cast<double>(prev_stage.actions[static_cast<std::size_t>(i)]);
    x.col(prev.cols() + 1) = prev_stage.rewards;
    x.rightCols(st.covariates.cols()) = st.covariates;
    history_.push_back(std::move(x));

    std::vector<std::string> names = history_names_[s - 1];
    names.push_back("a" + std::to_string(s));
    names.push_back("y" + std::to_string(s));
    names.insert(names.end(), st.covariate_names.begin(), st.covariate_names.end());
    history_names_.push_back(std::move(names));
  }
}

}  // namespace dtr
