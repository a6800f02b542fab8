#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "dtr/region.hpp"

namespace dtr {

/// Inputs for one clause search: covariates, the still-uncovered subject mask
/// and one column of advantage weights per action. Weight rows for inactive
/// subjects must be zero; the search minimizes
///   (1/n) * sum_i U_{i,a} * I(x_i in R)  -  eta * (2 - V(R))
/// over regions R with at least one active subject and actions a.
struct WeightPanel {
  Eigen::MatrixXd X;        // n x d
  Eigen::MatrixXd weights;  // n x m
  std::vector<std::uint8_t> active;
  /// Stable per-subject ordering keys; tie groups are accumulated in key
  /// order so results do not depend on row order. Defaults to row index.
  std::vector<long> keys;

  static WeightPanel make(Eigen::MatrixXd X, Eigen::MatrixXd weights,
                          std::vector<std::uint8_t> active, std::vector<long> keys = {});

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
  Eigen::Index action_count() const { return weights.cols(); }
  long active_count() const;
};

struct ClauseResult {
  Region region;
  int action = 0;
  double objective = std::numeric_limits<double>::infinity();
  long covered = 0;  // active subjects inside the region
};

/// Objective value for one (region, action); +infinity when the region
/// covers no active subject (vacuous clauses are excluded by constraint).
double objective_eval(const WeightPanel& panel, const Region& region, int action, double eta);

enum class ThresholdDirection { Le, Gt };

struct ThresholdPick {
  double tau = 0.0;
  double sum = std::numeric_limits<double>::infinity();
  long covered = 0;
  bool feasible = false;
};

/// Minimizes sum_i U_i * I(x_i <= tau) (or > for Gt) over thresholds at the
/// observed values, never counting an empty cover. Ties in x are aggregated
/// before scanning. O(n log n).
ThresholdPick best_threshold_1d(const Eigen::Ref<const Eigen::VectorXd>& values,
                                const Eigen::Ref<const Eigen::VectorXd>& u,
                                ThresholdDirection direction);

struct PairThresholdPick {
  double tau1 = 0.0;
  double tau2 = 0.0;
  double sum = std::numeric_limits<double>::infinity();
  long covered = 0;
  bool feasible = false;
};

/// Two-coordinate variant: minimizes the covered weight sum over all pairs of
/// observed thresholds for the given quadrant shape (LeLe, LeGt, GtLe, GtGt),
/// by sweeping one coordinate in sorted order and maintaining the other in a
/// prefix tree. O(n log n).
PairThresholdPick best_thresholds_2d(const Eigen::Ref<const Eigen::VectorXd>& x1,
                                     const Eigen::Ref<const Eigen::VectorXd>& x2,
                                     const Eigen::Ref<const Eigen::VectorXd>& u,
                                     RegionForm quadrant);

/// Complete binary tree over threshold ranks. Each node stores the weight sum
/// and subject count of its subtree together with the best prefix ending at
/// an occupied rank inside it, so the minimum over all prefix sums (and the
/// rank attaining it) is available at the root after every insert.
class PrefixTree {
 public:
  explicit PrefixTree(std::size_t rank_count);

  void insert(std::size_t rank, double u);  // repeated ranks accumulate
  void clear();

  struct Best {
    double sum = std::numeric_limits<double>::infinity();
    long covered = 0;
    std::size_t rank = 0;
    bool any = false;  // false while no rank is occupied
  };
  Best best() const;

  std::size_t capacity() const { return cap_; }

 private:
  void pull_up(std::size_t node);

  std::size_t cap_ = 1;  // leaf count, power of two
  std::vector<double> sum_;
  std::vector<long> cnt_;
  std::vector<Best> best_;
};

/// Best clause over every admissible region shape, the listed candidate
/// columns and all actions; O(n log n * |columns|^2 * m). Ties are broken by
/// fewer region variables, then larger cover, then lexicographically smallest
/// (j1, j2, tau1, tau2, action, form).
ClauseResult best_clause(const WeightPanel& panel, double eta,
                         const std::vector<int>& candidate_columns);

/// Reference search: enumerates every threshold pair explicitly through
/// dense rank-compressed cumulative tables. Used as the oracle in tests;
/// guarded to n <= 500.
ClauseResult brute_force_best_clause(const WeightPanel& panel, double eta,
                                     const std::vector<int>& candidate_columns);

}  // namespace dtr
