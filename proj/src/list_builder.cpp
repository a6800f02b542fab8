#include "dtr/list_builder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dtr {

int argmax_action(const Eigen::Ref<const Eigen::RowVectorXd>& q_row) {
  if (q_row.size() < 1) fail("list_build", "need at least one action");
  int best = 0;
  for (int a = 1; a < q_row.size(); ++a)
    if (q_row(a) > q_row(best)) best = a;
  return best;
}

int pi_q(const std::vector<KrrModel>& models, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (models.empty()) fail("list_build", "need at least one action model");
  int best = 0;
  double best_q = models[0].predict(x);
  for (std::size_t a = 1; a < models.size(); ++a) {
    const double q = models[a].predict(x);
    if (q > best_q) {
      best_q = q;
      best = static_cast<int>(a);
    }
  }
  return best;
}

WeightPanel compute_weights(const Eigen::MatrixXd& q_values,
                            const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const std::vector<std::uint8_t>& active, double zeta,
                            std::vector<long> keys) {
  const Eigen::Index n = X.rows();
  if (q_values.rows() != n || static_cast<Eigen::Index>(active.size()) != n)
    fail("list_build", "row count mismatch between covariates, values and mask");
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, q_values.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!active[static_cast<std::size_t>(i)]) continue;
    const double qmax = q_values.row(i).maxCoeff();
    u.row(i) = (qmax - q_values.row(i).array() - zeta).matrix();
  }
  return WeightPanel::make(X, std::move(u), active, std::move(keys));
}

WeightPanel compute_weights(const std::vector<KrrModel>& models,
                            const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const std::vector<std::uint8_t>& active, double zeta,
                            std::vector<long> keys) {
  Eigen::MatrixXd q(X.rows(), static_cast<Eigen::Index>(models.size()));
  for (std::size_t a = 0; a < models.size(); ++a)
    q.col(static_cast<Eigen::Index>(a)) = models[a].predict_many(X);
  return compute_weights(q, X, active, zeta, std::move(keys));
}

namespace {

// Best single action for the subjects flagged in `rows`; lowest index wins
// ties. Falls back to every subject when no row is active.
int best_single_action(const Eigen::MatrixXd& q, const std::vector<std::uint8_t>& active,
                       const std::vector<std::uint8_t>& usable) {
  const Eigen::Index n = q.rows();
  const Eigen::Index m = q.cols();
  Eigen::VectorXd totals = Eigen::VectorXd::Zero(m);
  long used = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!active[static_cast<std::size_t>(i)]) continue;
    totals += q.row(i).transpose();
    ++used;
  }
  if (used == 0) {
    for (Eigen::Index i = 0; i < n; ++i) totals += q.row(i).transpose();
  }
  int best = -1;
  for (Eigen::Index a = 0; a < m; ++a) {
    if (!usable[static_cast<std::size_t>(a)]) continue;
    if (best < 0 || totals(a) > totals(best)) best = static_cast<int>(a);
  }
  if (best < 0) fail("list_build", "no usable action");
  return best;
}

}  // namespace

BuildResult build_decision_list(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::MatrixXd& q_values, int stage, double zeta,
                                double eta, int max_clauses, const std::vector<int>& columns,
                                const std::vector<long>& keys,
                                const std::vector<std::uint8_t>& usable) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = q_values.cols();
  if (n < 1) fail("list_build", "cannot build a list from an empty sample");
  if (q_values.rows() != n) fail("list_build", "value matrix row mismatch");
  if (max_clauses < 1) fail("list_build", "need at least one clause");

  std::vector<std::uint8_t> ok = usable;
  if (ok.empty()) ok.assign(static_cast<std::size_t>(m), 1);
  std::vector<int> to_full;  // compressed column -> full action index
  for (Eigen::Index a = 0; a < m; ++a)
    if (ok[static_cast<std::size_t>(a)]) to_full.push_back(static_cast<int>(a));
  if (to_full.empty()) fail("list_build", "no usable action");
  Eigen::MatrixXd q(n, static_cast<Eigen::Index>(to_full.size()));
  for (std::size_t c = 0; c < to_full.size(); ++c) q.col(static_cast<Eigen::Index>(c)) = q_values.col(to_full[c]);

  std::vector<std::uint8_t> active(static_cast<std::size_t>(n), 1);
  long remaining = n;

  BuildResult out;
  out.list.stage = stage;

  for (int ell = 1; ell <= max_clauses; ++ell) {
    if (remaining == 0 || ell == max_clauses) {
      const int a = best_single_action(q, active, std::vector<std::uint8_t>(to_full.size(), 1));
      double objective = std::numeric_limits<double>::quiet_NaN();
      if (remaining > 0) {
        WeightPanel panel = compute_weights(q, X, active, zeta, keys);
        objective = objective_eval(panel, Region::all(), a, eta);
      }
      out.list.clauses.push_back(Clause{Region::all(), to_full[static_cast<std::size_t>(a)]});
      out.clauses.push_back(BuiltClause{Region::all(), to_full[static_cast<std::size_t>(a)],
                                        objective, remaining});
      break;
    }

    WeightPanel panel = compute_weights(q, X, active, zeta, keys);
    const ClauseResult pick = best_clause(panel, eta, columns);
    out.list.clauses.push_back(
        Clause{pick.region, to_full[static_cast<std::size_t>(pick.action)]});
    out.clauses.push_back(BuiltClause{pick.region, to_full[static_cast<std::size_t>(pick.action)],
                                      pick.objective, pick.covered});
    if (pick.region.form == RegionForm::All) break;

    for (Eigen::Index i = 0; i < n; ++i) {
      if (active[static_cast<std::size_t>(i)] && region_contains(pick.region, X.row(i))) {
        active[static_cast<std::size_t>(i)] = 0;
        --remaining;
      }
    }
  }
  validate_list(out.list);
  return out;
}

ZetaEtaResult tune_zeta_eta(const StageSlice& slice, const CellFitFactory& factory,
                            const std::vector<double>& zeta_grid,
                            const std::vector<double>& eta_grid, int folds, int max_clauses,
                            const std::vector<int>& columns, std::uint64_t seed, int threads) {
  if (folds < 2) fail("list_build", "cross-validation needs at least two folds");
  if (zeta_grid.empty() || eta_grid.empty()) fail("list_build", "empty penalty grid");
  const Eigen::Index n = slice.X.rows();
  const int m = slice.action_count;

  if (zeta_grid.size() == 1 && eta_grid.size() == 1) {
    ZetaEtaResult single;
    single.zeta = zeta_grid[0];
    single.eta = eta_grid[0];
    return single;
  }

  // Fold of a subject is a hash of its id: stable under row permutation.
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto id = static_cast<std::uint64_t>(slice.ids[static_cast<std::size_t>(i)]);
    fold_of[static_cast<std::size_t>(i)] =
        static_cast<int>(derive_seed(seed, 0x666f6c64, id) % static_cast<std::uint64_t>(folds));
  }

  struct FoldData {
    std::vector<int> train_rows, val_rows;
    Eigen::MatrixXd x_train, x_val;
    Eigen::MatrixXd q_train, q_val;  // n x m predicted values
    std::vector<std::uint8_t> usable;
    std::vector<long> train_keys;
    bool empty = false;
  };
  std::vector<FoldData> fold_data(static_cast<std::size_t>(folds));

  parallel_for(static_cast<std::size_t>(folds), threads, [&](std::size_t f) {
    FoldData& fd = fold_data[f];
    for (Eigen::Index i = 0; i < n; ++i) {
      if (fold_of[static_cast<std::size_t>(i)] == static_cast<int>(f))
        fd.val_rows.push_back(static_cast<int>(i));
      else
        fd.train_rows.push_back(static_cast<int>(i));
    }
    if (fd.train_rows.empty() || fd.val_rows.empty()) {
      fd.empty = true;
      return;
    }
    // Cells are assembled in id order so fits do not depend on row order.
    std::sort(fd.train_rows.begin(), fd.train_rows.end(), [&](int a, int b) {
      return slice.ids[static_cast<std::size_t>(a)] < slice.ids[static_cast<std::size_t>(b)];
    });
    const auto tn = static_cast<Eigen::Index>(fd.train_rows.size());
    const auto vn = static_cast<Eigen::Index>(fd.val_rows.size());
    fd.x_train.resize(tn, slice.X.cols());
    fd.x_val.resize(vn, slice.X.cols());
    fd.train_keys.resize(static_cast<std::size_t>(tn));
    for (Eigen::Index r = 0; r < tn; ++r) {
      fd.x_train.row(r) = slice.X.row(fd.train_rows[static_cast<std::size_t>(r)]);
      fd.train_keys[static_cast<std::size_t>(r)] =
          slice.ids[static_cast<std::size_t>(fd.train_rows[static_cast<std::size_t>(r)])];
    }
    for (Eigen::Index r = 0; r < vn; ++r)
      fd.x_val.row(r) = slice.X.row(fd.val_rows[static_cast<std::size_t>(r)]);

    fd.q_train = Eigen::MatrixXd::Zero(tn, m);
    fd.q_val = Eigen::MatrixXd::Zero(vn, m);
    fd.usable.assign(static_cast<std::size_t>(m), 0);
    for (int a = 0; a < m; ++a) {
      std::vector<int> cell;
      for (int row : fd.train_rows)
        if (slice.actions[static_cast<std::size_t>(row)] == a) cell.push_back(row);
      if (cell.empty()) continue;
      Eigen::MatrixXd cx(static_cast<Eigen::Index>(cell.size()), slice.X.cols());
      Eigen::VectorXd cy(static_cast<Eigen::Index>(cell.size()));
      for (std::size_t r = 0; r < cell.size(); ++r) {
        cx.row(static_cast<Eigen::Index>(r)) = slice.X.row(cell[r]);
        cy(static_cast<Eigen::Index>(r)) = slice.responses(cell[r]);
      }
      std::optional<KrrModel> model = factory(cx, cy, a);
      if (!model) continue;
      fd.usable[static_cast<std::size_t>(a)] = 1;
      fd.q_train.col(a) = model->predict_many(fd.x_train);
      fd.q_val.col(a) = model->predict_many(fd.x_val);
    }
    bool any = false;
    for (auto u : fd.usable) any = any || (u != 0);
    if (!any) fd.empty = true;
  });

  struct GridPoint {
    double zeta, eta;
  };
  std::vector<GridPoint> grid;
  for (double z : zeta_grid)
    for (double e : eta_grid) grid.push_back(GridPoint{z, e});

  std::vector<double> scores(grid.size(), 0.0);
  parallel_for(grid.size(), threads, [&](std::size_t g) {
    double acc = 0.0;
    int counted = 0;
    for (const FoldData& fd : fold_data) {
      if (fd.empty) continue;
      BuildResult built =
          build_decision_list(fd.x_train, fd.q_train, 1, grid[g].zeta, grid[g].eta, max_clauses,
                              columns, fd.train_keys, fd.usable);
      double fold_value = 0.0;
      for (Eigen::Index r = 0; r < fd.x_val.rows(); ++r) {
        const int a = apply_list(built.list, fd.x_val.row(r));
        fold_value += fd.q_val(r, a);
      }
      acc += fold_value / static_cast<double>(fd.x_val.rows());
      ++counted;
    }
    scores[g] = counted > 0 ? acc / counted : 0.0;
  });

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g)
    if (scores[g] > scores[best]) best = g;  // grid order favors smaller zeta, then eta
  ZetaEtaResult out;
  out.zeta = grid[best].zeta;
  out.eta = grid[best].eta;
  out.score = scores[best];
  out.grid_scores = scores;
  for (const GridPoint& gp : grid) out.grid.emplace_back(gp.zeta, gp.eta);
  return out;
}

}  // namespace dtr
