#include "dtr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

namespace dtr {

namespace {

constexpr std::uint64_t kTagTune = 0x74756e65;  // per-cell tuner streams
constexpr std::uint64_t kTagFold = 0x666f6c64;  // zeta/eta fold assignment

std::vector<std::vector<int>> action_cells(const StageData& st, int n) {
  std::vector<std::vector<int>> cells(st.action_labels.size());
  for (int i = 0; i < n; ++i) cells[static_cast<std::size_t>(st.actions[static_cast<std::size_t>(i)])].push_back(i);
  return cells;
}

}  // namespace

StageFit fit_stage(const TrajectoryDataset& data, int t,
                   const std::optional<Eigen::VectorXd>& next_pseudo, const FitConfig& config) {
  const int n = data.n();
  if (n < 1) fail("bad_dataset", "cannot fit on an empty dataset");
  const StageData& st = data.stage(t);
  const Eigen::MatrixXd& X = data.history(t);
  const int m = data.action_count(t);

  if (t == data.stage_count() && next_pseudo)
    fail("bad_stage", "the final stage takes no continuation values");
  if (t < data.stage_count() && !next_pseudo)
    fail("bad_stage", "interior stages need continuation values");

  Eigen::VectorXd responses = st.rewards;
  if (next_pseudo) {
    if (next_pseudo->size() != n) fail("bad_stage", "continuation column length mismatch");
    responses += *next_pseudo;
  }

  StageFit fit;
  fit.stage = t;
  fit.clip_bound = std::max(responses.array().abs().maxCoeff(), 1e-8);
  {
    const double mean = responses.mean();
    const double var =
        n > 1 ? (responses.array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
    fit.response_scale = var > 0.0 ? std::sqrt(var) : 1.0;
  }

  // Cells are ordered by subject id so fits do not depend on row order.
  std::vector<std::vector<int>> cells = action_cells(st, n);
  for (auto& cell : cells)
    std::sort(cell.begin(), cell.end(), [&](int a, int b) {
      return data.ids()[static_cast<std::size_t>(a)] < data.ids()[static_cast<std::size_t>(b)];
    });
  for (int a = 0; a < m; ++a) {
    if (cells[static_cast<std::size_t>(a)].empty())
      fail("positivity", "stage " + std::to_string(t) + " action '" + st.action_labels[static_cast<std::size_t>(a)] +
                             "' has no subjects");
  }

  fit.models.resize(static_cast<std::size_t>(m));
  fit.tuning.resize(static_cast<std::size_t>(m));
  fit.cell_sizes.resize(static_cast<std::size_t>(m));
  fit.default_params_used.assign(static_cast<std::size_t>(m), 0);

  const int cell_workers = std::min(config.threads, m);
  const int inner_threads = std::max(1, config.threads / std::max(1, cell_workers));
  parallel_for(static_cast<std::size_t>(m), config.threads, [&](std::size_t a) {
    const std::vector<int>& cell = cells[a];
    const auto na = static_cast<Eigen::Index>(cell.size());
    fit.cell_sizes[a] = na;
    Eigen::MatrixXd cx(na, X.cols());
    Eigen::VectorXd cy(na);
    for (Eigen::Index r = 0; r < na; ++r) {
      cx.row(r) = X.row(cell[static_cast<std::size_t>(r)]);
      cy(r) = responses(cell[static_cast<std::size_t>(r)]);
    }
    if (na == 1) {
      fit.tuning[a].params.gamma = default_gamma(cx);
      fit.tuning[a].lambda = 1.0;
      fit.default_params_used[a] = 1;
    } else {
      KrrTuneConfig tc = config.krr;
      tc.seed = derive_seed(config.seed, kTagTune + static_cast<std::uint64_t>(t), a);
      tc.threads = inner_threads;
      fit.tuning[a] = tune_krr(cx, cy, tc);
    }
    fit.models[a] = fit_krr(cx, cy, fit.tuning[a].params, fit.tuning[a].lambda, fit.clip_bound);
  });

  // Penalty grids scale with the response spread.
  std::vector<double> zeta_grid, eta_grid;
  for (double z : config.list.zeta_grid) zeta_grid.push_back(z * fit.response_scale);
  for (double e : config.list.eta_grid) eta_grid.push_back(e * fit.response_scale);
  std::vector<int> columns(static_cast<std::size_t>(X.cols()));
  for (std::size_t j = 0; j < columns.size(); ++j) columns[j] = static_cast<int>(j);

  if (zeta_grid.size() == 1 && eta_grid.size() == 1) {
    fit.zeta = zeta_grid[0];
    fit.eta = eta_grid[0];
  } else {
    StageSlice slice{X, st.actions, responses, m, data.ids()};
    CellFitFactory factory = [&](const Eigen::MatrixXd& cell_x, const Eigen::VectorXd& cell_y,
                                 int action) -> std::optional<KrrModel> {
      if (cell_x.rows() == 0) return std::nullopt;
      const KrrTuneResult& tuned = fit.tuning[static_cast<std::size_t>(action)];
      try {
        return fit_krr(cell_x, cell_y, tuned.params, tuned.lambda, fit.clip_bound);
      } catch (const Error&) {
        return std::nullopt;  // fold cell too degenerate to fit
      }
    };
    const ZetaEtaResult zr = tune_zeta_eta(
        slice, factory, zeta_grid, eta_grid, config.list.folds, config.list.max_clauses, columns,
        derive_seed(config.seed, kTagFold + static_cast<std::uint64_t>(t)), config.threads);
    fit.zeta = zr.zeta;
    fit.eta = zr.eta;
  }

  Eigen::MatrixXd q(n, m);
  for (int a = 0; a < m; ++a) q.col(a) = fit.models[static_cast<std::size_t>(a)].predict_many(X);
  BuildResult built = build_decision_list(X, q, t, fit.zeta, fit.eta, config.list.max_clauses,
                                          columns, data.ids());
  fit.list = std::move(built.list);
  fit.clause_diag = std::move(built.clauses);

  double value = 0.0;
  for (int i = 0; i < n; ++i) value += q(i, apply_list(fit.list, X.row(i)));
  fit.plugin_value = value / static_cast<double>(n);
  return fit;
}

Eigen::VectorXd pseudo_outcomes(const TrajectoryDataset& data, int t, const StageFit& next_fit) {
  if (t < 1 || t >= data.stage_count())
    fail("bad_stage", "pseudo outcomes exist for stages 1..T-1");
  const int n = data.n();
  const Eigen::MatrixXd& x_next = data.history(t + 1);
  Eigen::MatrixXd q(n, static_cast<Eigen::Index>(next_fit.models.size()));
  for (std::size_t a = 0; a < next_fit.models.size(); ++a)
    q.col(static_cast<Eigen::Index>(a)) = next_fit.models[a].predict_many(x_next);
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i)
    out(i) = data.stage(t).rewards(i) + q(i, apply_list(next_fit.list, x_next.row(i)));
  return out;
}

RegimeFit fit_regime(const TrajectoryDataset& data, const FitConfig& config) {
  const int T = data.stage_count();
  RegimeFit out;
  out.stages.resize(static_cast<std::size_t>(T));
  std::optional<Eigen::VectorXd> pseudo;
  for (int t = T; t >= 1; --t) {
    out.stages[static_cast<std::size_t>(t - 1)] = fit_stage(data, t, pseudo, config);
    if (t > 1) pseudo = pseudo_outcomes(data, t - 1, out.stages[static_cast<std::size_t>(t - 1)]);
  }
  for (int t = 1; t <= T; ++t) {
    out.regime.stages.push_back(out.stages[static_cast<std::size_t>(t - 1)].list);
    out.action_labels.push_back(data.stage(t).action_labels);
  }
  return out;
}

std::string fit_report_json(const RegimeFit& fit) {
  nlohmann::ordered_json doc;
  doc["stages"] = nlohmann::ordered_json::array();
  for (const StageFit& s : fit.stages) {
    nlohmann::ordered_json js;
    js["t"] = s.stage;
    js["cell_sizes"] = s.cell_sizes;
    js["zeta"] = s.zeta;
    js["eta"] = s.eta;
    js["response_scale"] = s.response_scale;
    js["clip_bound"] = s.clip_bound;
    js["plugin_value"] = s.plugin_value;
    js["list_length"] = s.list.clauses.size();
    js["default_params_used"] = false;
    for (auto flag : s.default_params_used)
      if (flag) js["default_params_used"] = true;
    nlohmann::ordered_json tuning = nlohmann::ordered_json::array();
    for (const KrrTuneResult& tr : s.tuning) {
      nlohmann::ordered_json jt;
      jt["lambda"] = tr.lambda;
      jt["loocv_mse"] = tr.objective;
      jt["degenerate"] = tr.degenerate;
      jt["evaluations"] = tr.evaluations;
      tuning.push_back(std::move(jt));
    }
    js["tuning"] = std::move(tuning);
    nlohmann::ordered_json clauses = nlohmann::ordered_json::array();
    for (const BuiltClause& c : s.clause_diag) {
      nlohmann::ordered_json jc;
      jc["form"] = region_form_name(c.region.form);
      jc["action"] = c.action;
      jc["covered"] = c.covered;
      if (!std::isnan(c.objective)) jc["objective"] = c.objective;
      clauses.push_back(std::move(jc));
    }
    js["clauses"] = std::move(clauses);
    doc["stages"].push_back(std::move(js));
  }
  return doc.dump(2) + "\n";
}

}  // namespace dtr
