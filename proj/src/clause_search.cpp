#include "dtr/clause_search.hpp"

#include <algorithm>
#include <cmath>

namespace dtr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Objectives closer than this are resolved by the structural tie-break.
constexpr double kTieEps = 1e-12;
}  // namespace

WeightPanel WeightPanel::make(Eigen::MatrixXd X, Eigen::MatrixXd weights,
                              std::vector<std::uint8_t> active, std::vector<long> keys) {
  const Eigen::Index n = X.rows();
  if (weights.rows() != n || static_cast<Eigen::Index>(active.size()) != n)
    fail("panel_shape", "covariates, weights and mask must have matching row counts");
  if (!X.allFinite() || !weights.allFinite())
    fail("panel_shape", "panel entries must be finite");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!active[static_cast<std::size_t>(i)] && weights.row(i).array().abs().maxCoeff() != 0.0)
      fail("panel_shape", "inactive subjects must carry zero weight");
  }
  if (keys.empty()) {
    keys.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) keys[static_cast<std::size_t>(i)] = i;
  } else if (static_cast<Eigen::Index>(keys.size()) != n) {
    fail("panel_shape", "key column length mismatch");
  }
  WeightPanel p;
  p.X = std::move(X);
  p.weights = std::move(weights);
  p.active = std::move(active);
  p.keys = std::move(keys);
  return p;
}

long WeightPanel::active_count() const {
  long c = 0;
  for (auto a : active) c += (a != 0);
  return c;
}

double objective_eval(const WeightPanel& panel, const Region& region, int action, double eta) {
  if (action < 0 || action >= panel.action_count())
    fail("panel_shape", "action index out of range");
  double sum = 0.0;
  long covered = 0;
  for (Eigen::Index i = 0; i < panel.n(); ++i) {
    if (!panel.active[static_cast<std::size_t>(i)]) continue;
    if (region_contains(region, panel.X.row(i))) {
      sum += panel.weights(i, action);
      ++covered;
    }
  }
  if (covered == 0) return kInf;
  return sum / static_cast<double>(panel.n()) - eta * (2.0 - region.var_count());
}

// ---------------------------------------------------------------------------
// Prefix tree
// ---------------------------------------------------------------------------

namespace {

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

PrefixTree::Best better_best(const PrefixTree::Best& a, const PrefixTree::Best& b) {
  if (!a.any) return b;
  if (!b.any) return a;
  if (a.sum != b.sum) return a.sum < b.sum ? a : b;
  if (a.covered != b.covered) return a.covered > b.covered ? a : b;
  return a.rank <= b.rank ? a : b;
}

}  // namespace

PrefixTree::PrefixTree(std::size_t rank_count)
    : cap_(next_pow2(std::max<std::size_t>(rank_count, 1))),
      sum_(2 * cap_, 0.0),
      cnt_(2 * cap_, 0),
      best_(2 * cap_) {}

void PrefixTree::clear() {
  std::fill(sum_.begin(), sum_.end(), 0.0);
  std::fill(cnt_.begin(), cnt_.end(), 0L);
  std::fill(best_.begin(), best_.end(), Best{});
}

void PrefixTree::pull_up(std::size_t node) {
  const std::size_t l = 2 * node;
  const std::size_t r = 2 * node + 1;
  sum_[node] = sum_[l] + sum_[r];
  cnt_[node] = cnt_[l] + cnt_[r];
  Best from_right = best_[r];
  if (from_right.any) {
    from_right.sum += sum_[l];
    from_right.covered += cnt_[l];
  }
  best_[node] = better_best(best_[l], from_right);
}

void PrefixTree::insert(std::size_t rank, double u) {
  if (rank >= cap_) fail("tree_rank", "rank " + std::to_string(rank) + " exceeds capacity");
  std::size_t node = cap_ + rank;
  sum_[node] += u;
  cnt_[node] += 1;
  best_[node] = Best{sum_[node], cnt_[node], rank, true};
  for (node /= 2; node >= 1; node /= 2) pull_up(node);
}

PrefixTree::Best PrefixTree::best() const { return best_[1]; }

// ---------------------------------------------------------------------------
// Candidate bookkeeping shared by the fast search and the oracle
// ---------------------------------------------------------------------------

namespace {

struct Candidate {
  double objective = kInf;
  int vcount = 3;
  long covered = 0;
  int j1 = -1;
  int j2 = -1;
  double tau1 = 0.0;
  double tau2 = 0.0;
  int action = 0;
  int form = 0;  // RegionForm enumerator value
  bool feasible = false;
};

bool candidate_better(const Candidate& a, const Candidate& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (!a.feasible) return false;
  if (a.objective < b.objective - kTieEps) return true;
  if (b.objective < a.objective - kTieEps) return false;
  if (a.vcount != b.vcount) return a.vcount < b.vcount;
  if (a.covered != b.covered) return a.covered > b.covered;
  if (a.j1 != b.j1) return a.j1 < b.j1;
  if (a.j2 != b.j2) return a.j2 < b.j2;
  if (a.tau1 != b.tau1) return a.tau1 < b.tau1;
  if (a.tau2 != b.tau2) return a.tau2 < b.tau2;
  if (a.action != b.action) return a.action < b.action;
  return a.form < b.form;
}

Region candidate_region(const Candidate& c) {
  switch (static_cast<RegionForm>(c.form)) {
    case RegionForm::All: return Region::all();
    case RegionForm::Le: return Region::le(c.j1, c.tau1);
    case RegionForm::Gt: return Region::gt(c.j1, c.tau1);
    default: return Region::pair(static_cast<RegionForm>(c.form), c.j1, c.tau1, c.j2, c.tau2);
  }
}

ClauseResult to_result(const Candidate& c) {
  if (!c.feasible) fail("clause_search", "no feasible clause candidate");
  return ClauseResult{candidate_region(c), c.action, c.objective, c.covered};
}

// Active rows of one column sorted by (value, key); value ties are grouped so
// their weights aggregate in key order regardless of the panel's row order.
struct SortedColumn {
  std::vector<std::pair<double, int>> entries;  // (value, row), ascending
  std::vector<double> distinct;                 // ascending
  std::vector<int> rank;                        // row -> ascending distinct rank
};

SortedColumn sort_column(const WeightPanel& panel, const std::vector<int>& active_rows, int j) {
  SortedColumn col;
  col.entries.reserve(active_rows.size());
  for (int row : active_rows)
    col.entries.emplace_back(panel.X(row, j), row);
  std::sort(col.entries.begin(), col.entries.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return panel.keys[static_cast<std::size_t>(a.second)] <
           panel.keys[static_cast<std::size_t>(b.second)];
  });
  col.rank.assign(static_cast<std::size_t>(panel.n()), -1);
  for (const auto& [value, row] : col.entries) {
    if (col.distinct.empty() || col.distinct.back() != value) col.distinct.push_back(value);
    col.rank[static_cast<std::size_t>(row)] = static_cast<int>(col.distinct.size()) - 1;
  }
  return col;
}

std::vector<int> sorted_active_rows(const WeightPanel& panel) {
  std::vector<int> rows;
  rows.reserve(static_cast<std::size_t>(panel.n()));
  for (Eigen::Index i = 0; i < panel.n(); ++i)
    if (panel.active[static_cast<std::size_t>(i)]) rows.push_back(static_cast<int>(i));
  std::sort(rows.begin(), rows.end(), [&](int a, int b) {
    return panel.keys[static_cast<std::size_t>(a)] < panel.keys[static_cast<std::size_t>(b)];
  });
  return rows;
}

std::vector<int> normalize_columns(const WeightPanel& panel, std::vector<int> cols) {
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  if (cols.empty()) fail("clause_search", "no candidate columns");
  if (cols.front() < 0 || cols.back() >= panel.dim())
    fail("clause_search", "candidate column out of range");
  return cols;
}

template <class Fold>
void scan_1d(const SortedColumn& col, const WeightPanel& panel, int j, int action, double eta,
             Fold&& fold) {
  const double inv_n = 1.0 / static_cast<double>(panel.n());
  const auto& e = col.entries;
  const std::size_t N = e.size();
  // x <= tau over ascending prefixes.
  double run = 0.0;
  long cnt = 0;
  for (std::size_t i = 0; i < N;) {
    const double v = e[i].first;
    while (i < N && e[i].first == v) {
      run += panel.weights(e[i].second, action);
      ++cnt;
      ++i;
    }
    fold(Candidate{run * inv_n - eta, 1, cnt, j, -1, v, 0.0, action,
                   static_cast<int>(RegionForm::Le), true});
  }
  // x > tau over descending suffixes; tau below the minimum is not an
  // observed value, so the full cover is not a Gt candidate.
  run = 0.0;
  cnt = 0;
  std::size_t i = N;
  while (i > 0) {
    const double v = e[i - 1].first;
    double gsum = 0.0;
    long gcnt = 0;
    while (i > 0 && e[i - 1].first == v) {
      gsum += panel.weights(e[i - 1].second, action);
      ++gcnt;
      --i;
    }
    if (i > 0) {
      run += gsum;
      cnt += gcnt;
      fold(Candidate{run * inv_n - eta, 1, cnt, j, -1, e[i - 1].first, 0.0, action,
                     static_cast<int>(RegionForm::Gt), true});
    }
  }
}

struct QuadrantDirs {
  bool le1 = true;
  bool le2 = true;
};

QuadrantDirs quadrant_dirs(RegionForm q) {
  switch (q) {
    case RegionForm::LeLe: return {true, true};
    case RegionForm::LeGt: return {true, false};
    case RegionForm::GtLe: return {false, true};
    case RegionForm::GtGt: return {false, false};
    default: fail("clause_search", "not a two-variable form");
  }
}

template <class Fold>
void sweep_pair(const SortedColumn& c1, const SortedColumn& c2, const WeightPanel& panel, int j1,
                int j2, RegionForm quadrant, int action, PrefixTree& tree, Fold&& fold) {
  const QuadrantDirs dirs = quadrant_dirs(quadrant);
  const double inv_n = 1.0 / static_cast<double>(panel.n());
  const std::size_t K2 = c2.distinct.size();
  if (!dirs.le2 && K2 < 2) return;  // "x2 > tau2" cannot cover a single-valued column

  tree.clear();
  auto tree_rank = [&](int row) -> long {
    const int asc = c2.rank[static_cast<std::size_t>(row)];
    if (dirs.le2) return asc;
    if (asc == 0) return -1;  // the minimum can never satisfy x2 > tau2
    return static_cast<long>(K2) - 1 - asc;
  };
  auto tau2_of = [&](std::size_t r) {
    return dirs.le2 ? c2.distinct[r] : c2.distinct[K2 - 2 - r];
  };
  auto emit = [&](double tau1) {
    const PrefixTree::Best q = tree.best();
    if (!q.any) return;
    fold(Candidate{q.sum * inv_n, 2, q.covered, j1, j2, tau1, tau2_of(q.rank), action,
                   static_cast<int>(quadrant), true});
  };
  auto insert_row = [&](int row) {
    const long r = tree_rank(row);
    if (r >= 0) tree.insert(static_cast<std::size_t>(r), panel.weights(row, action));
  };

  const auto& e = c1.entries;
  const std::size_t N = e.size();
  if (dirs.le1) {
    for (std::size_t i = 0; i < N;) {
      const double v = e[i].first;
      while (i < N && e[i].first == v) {
        insert_row(e[i].second);
        ++i;
      }
      emit(v);
    }
  } else {
    // Descending groups: before inserting the group at value v, the tree holds
    // exactly the subjects with x1 > v, so v is the matching strict threshold.
    std::size_t i = N;
    while (i > 0) {
      const double v = e[i - 1].first;
      std::size_t begin = i;
      while (begin > 0 && e[begin - 1].first == v) --begin;
      if (i != N) emit(v);
      for (std::size_t k = begin; k < i; ++k) insert_row(e[k].second);
      i = begin;
    }
  }
}

}  // namespace

ThresholdPick best_threshold_1d(const Eigen::Ref<const Eigen::VectorXd>& values,
                                const Eigen::Ref<const Eigen::VectorXd>& u,
                                ThresholdDirection direction) {
  const Eigen::Index n = values.size();
  if (n < 1) fail("clause_search", "need at least one observation");
  if (u.size() != n) fail("clause_search", "value and weight columns differ in length");
  WeightPanel panel = WeightPanel::make(values, u, std::vector<std::uint8_t>(n, 1));
  SortedColumn col = sort_column(panel, sorted_active_rows(panel), 0);
  ThresholdPick pick;
  Candidate best;
  const int want = direction == ThresholdDirection::Le ? static_cast<int>(RegionForm::Le)
                                                       : static_cast<int>(RegionForm::Gt);
  scan_1d(col, panel, 0, 0, 0.0, [&](const Candidate& c) {
    if (c.form == want && candidate_better(c, best)) best = c;
  });
  if (!best.feasible) return pick;
  pick.tau = best.tau1;
  pick.sum = best.objective * static_cast<double>(n);
  pick.covered = best.covered;
  pick.feasible = true;
  return pick;
}

PairThresholdPick best_thresholds_2d(const Eigen::Ref<const Eigen::VectorXd>& x1,
                                     const Eigen::Ref<const Eigen::VectorXd>& x2,
                                     const Eigen::Ref<const Eigen::VectorXd>& u,
                                     RegionForm quadrant) {
  const Eigen::Index n = x1.size();
  if (n < 1) fail("clause_search", "need at least one observation");
  if (x2.size() != n || u.size() != n) fail("clause_search", "column length mismatch");
  if (!region_form_is_two_var(quadrant)) fail("clause_search", "not a two-variable form");
  Eigen::MatrixXd X(n, 2);
  X.col(0) = x1;
  X.col(1) = x2;
  WeightPanel panel = WeightPanel::make(std::move(X), u, std::vector<std::uint8_t>(n, 1));
  const std::vector<int> rows = sorted_active_rows(panel);
  SortedColumn c1 = sort_column(panel, rows, 0);
  SortedColumn c2 = sort_column(panel, rows, 1);
  PrefixTree tree(c2.distinct.size());
  Candidate best;
  sweep_pair(c1, c2, panel, 0, 1, quadrant, 0, tree, [&](const Candidate& c) {
    if (candidate_better(c, best)) best = c;
  });
  PairThresholdPick pick;
  if (!best.feasible) return pick;
  pick.tau1 = best.tau1;
  pick.tau2 = best.tau2;
  pick.sum = best.objective * static_cast<double>(n);
  pick.covered = best.covered;
  pick.feasible = true;
  return pick;
}

ClauseResult best_clause(const WeightPanel& panel, double eta,
                         const std::vector<int>& candidate_columns) {
  const std::vector<int> cols = normalize_columns(panel, candidate_columns);
  const std::vector<int> rows = sorted_active_rows(panel);
  if (rows.empty()) fail("no_active", "clause search requires at least one active subject");
  const double inv_n = 1.0 / static_cast<double>(panel.n());
  const int m = static_cast<int>(panel.action_count());

  Candidate best;
  auto fold = [&](const Candidate& c) {
    if (candidate_better(c, best)) best = c;
  };

  for (int a = 0; a < m; ++a) {
    double sum = 0.0;
    for (int row : rows) sum += panel.weights(row, a);
    fold(Candidate{sum * inv_n - 2.0 * eta, 0, static_cast<long>(rows.size()), -1, -1, 0.0, 0.0,
                   a, static_cast<int>(RegionForm::All), true});
  }

  std::vector<SortedColumn> sorted;
  sorted.reserve(cols.size());
  for (int j : cols) sorted.push_back(sort_column(panel, rows, j));

  for (std::size_t cj = 0; cj < cols.size(); ++cj)
    for (int a = 0; a < m; ++a) scan_1d(sorted[cj], panel, cols[cj], a, eta, fold);

  for (std::size_t p = 0; p < cols.size(); ++p) {
    for (std::size_t q = p + 1; q < cols.size(); ++q) {
      const std::size_t max_ranks = sorted[q].distinct.size();
      PrefixTree tree(max_ranks);
      for (RegionForm quad : {RegionForm::LeLe, RegionForm::LeGt, RegionForm::GtLe,
                              RegionForm::GtGt}) {
        for (int a = 0; a < m; ++a)
          sweep_pair(sorted[p], sorted[q], panel, cols[p], cols[q], quad, a, tree, fold);
      }
    }
  }
  return to_result(best);
}

ClauseResult brute_force_best_clause(const WeightPanel& panel, double eta,
                                     const std::vector<int>& candidate_columns) {
  if (panel.n() > 500)
    fail("brute_guard", "brute-force search is limited to 500 subjects, got " +
                            std::to_string(panel.n()));
  const std::vector<int> cols = normalize_columns(panel, candidate_columns);
  const std::vector<int> rows = sorted_active_rows(panel);
  if (rows.empty()) fail("no_active", "clause search requires at least one active subject");
  const double inv_n = 1.0 / static_cast<double>(panel.n());
  const int m = static_cast<int>(panel.action_count());

  Candidate best;
  auto fold = [&](const Candidate& c) {
    if (candidate_better(c, best)) best = c;
  };

  for (int a = 0; a < m; ++a) {
    double sum = 0.0;
    for (int row : rows) sum += panel.weights(row, a);
    fold(Candidate{sum * inv_n - 2.0 * eta, 0, static_cast<long>(rows.size()), -1, -1, 0.0, 0.0,
                   a, static_cast<int>(RegionForm::All), true});
  }

  std::vector<SortedColumn> sorted;
  sorted.reserve(cols.size());
  for (int j : cols) sorted.push_back(sort_column(panel, rows, j));

  // One-variable candidates from aggregated prefix/suffix tables.
  for (std::size_t cj = 0; cj < cols.size(); ++cj) {
    const SortedColumn& col = sorted[cj];
    const std::size_t K = col.distinct.size();
    for (int a = 0; a < m; ++a) {
      std::vector<double> group_sum(K, 0.0);
      std::vector<long> group_cnt(K, 0);
      for (const auto& [value, row] : col.entries) {
        const auto r = static_cast<std::size_t>(col.rank[static_cast<std::size_t>(row)]);
        group_sum[r] += panel.weights(row, a);
        group_cnt[r] += 1;
      }
      double run = 0.0;
      long cnt = 0;
      double total = 0.0;
      long total_cnt = 0;
      for (std::size_t k = 0; k < K; ++k) {
        total += group_sum[k];
        total_cnt += group_cnt[k];
      }
      for (std::size_t k = 0; k < K; ++k) {
        run += group_sum[k];
        cnt += group_cnt[k];
        fold(Candidate{run * inv_n - eta, 1, cnt, cols[cj], -1, col.distinct[k], 0.0, a,
                       static_cast<int>(RegionForm::Le), true});
        if (total_cnt - cnt > 0)
          fold(Candidate{(total - run) * inv_n - eta, 1, total_cnt - cnt, cols[cj], -1,
                         col.distinct[k], 0.0, a, static_cast<int>(RegionForm::Gt), true});
      }
    }
  }

  // Two-variable candidates from dense cumulative tables.
  for (std::size_t p = 0; p < cols.size(); ++p) {
    for (std::size_t q = p + 1; q < cols.size(); ++q) {
      const SortedColumn& c1 = sorted[p];
      const SortedColumn& c2 = sorted[q];
      const auto K1 = static_cast<Eigen::Index>(c1.distinct.size());
      const auto K2 = static_cast<Eigen::Index>(c2.distinct.size());
      Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(K1, K2);
      std::vector<Eigen::MatrixXd> sums(static_cast<std::size_t>(m),
                                        Eigen::MatrixXd::Zero(K1, K2));
      for (int row : rows) {
        const auto r1 = c1.rank[static_cast<std::size_t>(row)];
        const auto r2 = c2.rank[static_cast<std::size_t>(row)];
        counts(r1, r2) += 1.0;
        for (int a = 0; a < m; ++a) sums[static_cast<std::size_t>(a)](r1, r2) += panel.weights(row, a);
      }
      auto cumulate = [](Eigen::MatrixXd& M) {
        for (Eigen::Index i = 1; i < M.rows(); ++i) M.row(i) += M.row(i - 1);
        for (Eigen::Index j = 1; j < M.cols(); ++j) M.col(j) += M.col(j - 1);
      };
      cumulate(counts);
      for (auto& s : sums) cumulate(s);
      const double total_cnt = counts(K1 - 1, K2 - 1);
      for (int a = 0; a < m; ++a) {
        const Eigen::MatrixXd& S = sums[static_cast<std::size_t>(a)];
        const double total = S(K1 - 1, K2 - 1);
        for (Eigen::Index t1 = 0; t1 < K1; ++t1) {
          for (Eigen::Index t2 = 0; t2 < K2; ++t2) {
            const double le_le_cnt = counts(t1, t2);
            const double le_any_cnt = counts(t1, K2 - 1);
            const double any_le_cnt = counts(K1 - 1, t2);
            const double le_le = S(t1, t2);
            const double le_any = S(t1, K2 - 1);
            const double any_le = S(K1 - 1, t2);
            struct Q {
              RegionForm form;
              double sum;
              double cnt;
            };
            const Q quads[4] = {
                {RegionForm::LeLe, le_le, le_le_cnt},
                {RegionForm::LeGt, le_any - le_le, le_any_cnt - le_le_cnt},
                {RegionForm::GtLe, any_le - le_le, any_le_cnt - le_le_cnt},
                {RegionForm::GtGt, total - le_any - any_le + le_le,
                 total_cnt - le_any_cnt - any_le_cnt + le_le_cnt},
            };
            for (const Q& quad : quads) {
              if (quad.cnt <= 0.5) continue;
              fold(Candidate{quad.sum * inv_n, 2, static_cast<long>(quad.cnt + 0.5), cols[p],
                             cols[q], c1.distinct[static_cast<std::size_t>(t1)],
                             c2.distinct[static_cast<std::size_t>(t2)], a,
                             static_cast<int>(quad.form), true});
            }
          }
        }
      }
    }
  }
  return to_result(best);
}

}  // namespace dtr
