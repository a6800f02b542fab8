#include "dtr/kernel_ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace dtr {

namespace {

// Weighted squared distances for one coordinate, mirrored so the result is
// symmetric by construction.
void add_coordinate_sqdist(Eigen::MatrixXd& M, const Eigen::Ref<const Eigen::VectorXd>& col,
                           double weight) {
  const Eigen::Index n = col.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = i + 1; k < n; ++k) {
      const double d = col(i) - col(k);
      const double v = weight * d * d;
      M(i, k) += v;
      M(k, i) += v;
    }
  }
}

Eigen::MatrixXd weighted_sqdist(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::VectorXd& gamma) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(X.rows(), X.rows());
  for (Eigen::Index j = 0; j < X.cols(); ++j) add_coordinate_sqdist(M, X.col(j), gamma(j));
  return M;
}

void check_gamma(const KernelParams& params, Eigen::Index d) {
  if (params.gamma.size() != d)
    fail("krr_shape", "kernel has " + std::to_string(params.gamma.size()) +
                          " scales but the data has " + std::to_string(d) + " columns");
  if (!(params.gamma.array() > 0.0).all()) fail("krr_shape", "kernel scales must be positive");
}

struct LooState {
  Eigen::VectorXd z;     // (K + n lambda I)^{-1} y
  Eigen::VectorXd dinv;  // diag((K + n lambda I)^{-1})
};

// Explicit leave-one-out refit at the same absolute ridge; reference path and
// fallback for numerically degenerate leverages.
double loo_refit_prediction(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double ridge,
                            Eigen::Index i) {
  const Eigen::Index n = K.rows();
  Eigen::MatrixXd A(n - 1, n - 1);
  Eigen::VectorXd rhs(n - 1);
  Eigen::VectorXd cross(n - 1);
  Eigen::Index r = 0;
  for (Eigen::Index a = 0; a < n; ++a) {
    if (a == i) continue;
    Eigen::Index c = 0;
    for (Eigen::Index b = 0; b < n; ++b) {
      if (b == i) continue;
      A(r, c) = K(a, b);
      ++c;
    }
    A(r, r) += ridge;
    rhs(r) = y(a);
    cross(r) = K(i, a);
    ++r;
  }
  Eigen::VectorXd beta = A.ldlt().solve(rhs);
  return cross.dot(beta);
}

}  // namespace

double kernel_eval(const KernelParams& params, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& z) {
  if (x.size() != z.size())
    fail("krr_shape", "kernel arguments have lengths " + std::to_string(x.size()) + " and " +
                          std::to_string(z.size()));
  check_gamma(params, x.size());
  const double e = (params.gamma.array() * (x - z).array().square()).sum();
  return std::exp(-e);
}

Eigen::MatrixXd gram_matrix(const KernelParams& params,
                            const Eigen::Ref<const Eigen::MatrixXd>& X) {
  check_gamma(params, X.cols());
  Eigen::MatrixXd K = (-weighted_sqdist(X, params.gamma)).array().exp();
  K.diagonal().setOnes();
  return K;
}

double KrrModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != support.cols()) fail("krr_shape", "prediction point has the wrong length");
  const Eigen::VectorXd e =
      (support.rowwise() - x.transpose()).array().square().matrix() * params.gamma;
  const Eigen::VectorXd k = (-e.array()).exp();
  return std::clamp(k.dot(beta), -clip_bound, clip_bound);
}

Eigen::VectorXd KrrModel::predict_many(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
  if (X.cols() != support.cols()) fail("krr_shape", "prediction matrix has the wrong width");
  // exp(-sum_j g_j (x_j - s_j)^2) via the expanded square, one GEMM overall.
  const Eigen::VectorXd g = params.gamma;
  Eigen::MatrixXd Xw = X * g.asDiagonal();
  Eigen::VectorXd xn = (X.array() * Xw.array()).rowwise().sum();
  Eigen::VectorXd sn = ((support * g.asDiagonal()).array() * support.array()).rowwise().sum();
  Eigen::MatrixXd M = (-2.0 * (Xw * support.transpose())).colwise() + xn;
  M.rowwise() += sn.transpose();
  Eigen::VectorXd out = (-M.array().max(0.0)).exp().matrix() * beta;
  return out.array().min(clip_bound).max(-clip_bound);
}

KrrModel fit_krr(const Eigen::Ref<const Eigen::MatrixXd>& X,
                 const Eigen::Ref<const Eigen::VectorXd>& y, const KernelParams& params,
                 double lambda, double clip_bound) {
  const Eigen::Index n = X.rows();
  if (n < 1) fail("krr_shape", "cannot fit on an empty cell");
  if (y.size() != n) fail("krr_shape", "response length mismatch");
  if (lambda < 0.0) fail("krr_shape", "ridge weight must be nonnegative");
  if (!(clip_bound > 0.0)) fail("krr_shape", "clip bound must be positive");
  check_gamma(params, X.cols());

  const Eigen::MatrixXd K = gram_matrix(params, X);
  const double ridge = static_cast<double>(n) * lambda;
  const double tol = 1e-8 * std::max(y.norm(), 1e-300);

  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += ridge + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd beta = llt.solve(y);
      // Residual against the unjittered system is the contract.
      Eigen::VectorXd res = K * beta + ridge * beta - y;
      if (res.norm() <= tol)
        return KrrModel{X, std::move(beta), params, lambda, clip_bound};
    }
    jitter = (jitter == 0.0) ? 1e-12 : jitter * 10.0;
    if (jitter > 1e-6)
      fail("krr_solve", "gram system is too ill-conditioned even with jitter (n=" +
                            std::to_string(n) + ", lambda=" + format_double(lambda) + ")");
  }
}

namespace {

LooState loo_state(const Eigen::MatrixXd& K, const Eigen::Ref<const Eigen::VectorXd>& y,
                   double ridge) {
  Eigen::MatrixXd A = K;
  A.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    // Keep the search usable on degenerate candidates.
    A.diagonal().array() += 1e-10;
    llt.compute(A);
    if (llt.info() != Eigen::Success) fail("krr_solve", "gram system not positive definite");
  }
  LooState s;
  s.z = llt.solve(y);
  Eigen::MatrixXd Linv = llt.matrixL().solve(Eigen::MatrixXd::Identity(K.rows(), K.rows()));
  s.dinv = Linv.array().square().colwise().sum();
  return s;
}

double loocv_from_gram(const Eigen::MatrixXd& K, const Eigen::Ref<const Eigen::VectorXd>& y,
                       double lambda) {
  const Eigen::Index n = K.rows();
  const double ridge = static_cast<double>(n) * lambda;
  const LooState s = loo_state(K, y, ridge);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double e;
    if (s.dinv(i) > std::numeric_limits<double>::min()) {
      e = s.z(i) / s.dinv(i);
    } else {
      e = y(i) - loo_refit_prediction(K, y, ridge, i);
    }
    acc += e * e;
  }
  return acc / static_cast<double>(n);
}

}  // namespace

double loocv_mse(const Eigen::Ref<const Eigen::MatrixXd>& X,
                 const Eigen::Ref<const Eigen::VectorXd>& y, const KernelParams& params,
                 double lambda) {
  if (X.rows() < 2) fail("krr_shape", "leave-one-out needs at least two rows");
  return loocv_from_gram(gram_matrix(params, X), y, lambda);
}

Eigen::VectorXd default_gamma(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  Eigen::VectorXd g(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double var = 0.0;
    if (n > 1) {
      const double mean = X.col(j).mean();
      var = (X.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
    }
    if (!(var > 1e-12)) var = 1.0;
    g(j) = 1.0 / (static_cast<double>(d) * var);
  }
  return g;
}

namespace {

// Coordinate-descent state sharing the weighted distance matrix so a single
// coordinate move costs one rank-style update plus one Cholesky.
class TuneProblem {
 public:
  TuneProblem(const Eigen::Ref<const Eigen::MatrixXd>& X,
              const Eigen::Ref<const Eigen::VectorXd>& y)
      : X_(X), y_(y), M_(Eigen::MatrixXd::Zero(X.rows(), X.rows())) {}

  void reset(const Eigen::VectorXd& log_gamma, double log_lambda) {
    log_gamma_ = log_gamma;
    log_lambda_ = log_lambda;
    M_.setZero();
    for (Eigen::Index j = 0; j < X_.cols(); ++j)
      add_coordinate_sqdist(M_, X_.col(j), std::exp(log_gamma_(j)));
  }

  double objective() {
    Eigen::MatrixXd K = (-M_).array().exp();
    K.diagonal().setOnes();
    ++evals_;
    return loocv_from_gram(K, y_, std::exp(log_lambda_));
  }

  // Objective with coordinate j moved to lg; commit_last() keeps the probed
  // move, otherwise it is rolled back before the next probe.
  double probe_gamma(Eigen::Index j, double lg) {
    rollback();
    pending_gamma_ = j;
    pending_delta_ = std::exp(lg) - std::exp(log_gamma_(j));
    pending_prev_ = log_gamma_(j);
    add_coordinate_sqdist(M_, X_.col(j), pending_delta_);
    log_gamma_(j) = lg;
    return objective();
  }

  double probe_lambda(double ll) {
    rollback();
    pending_lambda_prev_ = log_lambda_;
    pending_lambda_ = true;
    log_lambda_ = ll;
    return objective();
  }

  void commit_last() {
    pending_gamma_ = -1;
    pending_lambda_ = false;
  }

  void rollback() {
    if (pending_gamma_ >= 0) {
      add_coordinate_sqdist(M_, X_.col(pending_gamma_), -pending_delta_);
      log_gamma_(pending_gamma_) = pending_prev_;
      pending_gamma_ = -1;
    }
    if (pending_lambda_) {
      log_lambda_ = pending_lambda_prev_;
      pending_lambda_ = false;
    }
  }

  const Eigen::VectorXd& log_gamma() const { return log_gamma_; }
  double log_lambda() const { return log_lambda_; }
  long long evals() const { return evals_; }

 private:
  Eigen::Ref<const Eigen::MatrixXd> X_;
  Eigen::Ref<const Eigen::VectorXd> y_;
  Eigen::MatrixXd M_;
  Eigen::VectorXd log_gamma_;
  double log_lambda_ = 0.0;
  long long evals_ = 0;
  Eigen::Index pending_gamma_ = -1;
  double pending_delta_ = 0.0;
  double pending_prev_ = 0.0;
  bool pending_lambda_ = false;
  double pending_lambda_prev_ = 0.0;
};

struct StartResult {
  Eigen::VectorXd log_gamma;
  double log_lambda = 0.0;
  double objective = std::numeric_limits<double>::infinity();
  long long evals = 0;
};

StartResult run_start(const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::VectorXd>& y, const KrrTuneConfig& cfg,
                      std::uint64_t seed) {
  const Eigen::Index d = X.cols();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-2.0, 2.0);

  const Eigen::VectorXd base = default_gamma(X).array().log();
  Eigen::VectorXd lg(d);
  for (Eigen::Index j = 0; j < d; ++j)
    lg(j) = std::clamp(base(j) + jitter(rng), cfg.log_gamma_min, cfg.log_gamma_max);
  std::uniform_real_distribution<double> ll_draw(std::max(cfg.log_lambda_min, -6.0),
                                                 std::min(cfg.log_lambda_max, 0.0));
  double ll = ll_draw(rng);

  TuneProblem problem(X, y);
  problem.reset(lg, ll);
  double best = problem.objective();

  double step = 1.0;
  for (int sweep = 0; sweep < cfg.sweeps && step >= 0.01; ++sweep) {
    const double sweep_start = best;
    bool moved = false;
    for (Eigen::Index coord = 0; coord <= d; ++coord) {
      const bool is_lambda = (coord == d);
      const double cur = is_lambda ? problem.log_lambda() : problem.log_gamma()(coord);
      const double lo = is_lambda ? cfg.log_lambda_min : cfg.log_gamma_min;
      const double hi = is_lambda ? cfg.log_lambda_max : cfg.log_gamma_max;
      for (double dir : {+1.0, -1.0}) {
        const double cand = std::clamp(cur + dir * step, lo, hi);
        if (cand == cur) continue;
        const double obj =
            is_lambda ? problem.probe_lambda(cand) : problem.probe_gamma(coord, cand);
        if (obj < best) {
          best = obj;
          problem.commit_last();
          moved = true;
          break;
        }
      }
      problem.rollback();
    }
    if (!moved) {
      step *= 0.5;
    } else if (sweep_start - best <= cfg.rel_tol * std::max(1.0, std::abs(sweep_start)) &&
               step <= 0.25) {
      break;
    }
  }
  return StartResult{problem.log_gamma(), problem.log_lambda(), best, problem.evals()};
}

}  // namespace

KrrTuneResult tune_krr(const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& y, const KrrTuneConfig& config) {
  if (X.rows() < 2) fail("krr_shape", "tuning needs at least two rows");
  KrrTuneResult out;

  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / static_cast<double>(y.size());
  out.degenerate = !(var > 0.0);
  if (out.degenerate && config.grid.empty()) {
    // Nothing to search against; fall back to scale heuristics.
    out.params.gamma = default_gamma(X);
    out.lambda = 1.0;
    return out;
  }

  if (!config.grid.empty()) {
    // Length-one gamma entries are broadcast to the data dimension so one
    // grid can serve cells of different widths.
    auto expand = [&](const Eigen::VectorXd& g) -> Eigen::VectorXd {
      if (g.size() == X.cols()) return g;
      if (g.size() == 1) return Eigen::VectorXd::Constant(X.cols(), g(0));
      fail("krr_shape", "grid gamma has length " + std::to_string(g.size()) +
                            " but the data has " + std::to_string(X.cols()) + " columns");
    };
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    std::vector<double> objs(config.grid.size());
    parallel_for(config.grid.size(), config.threads, [&](std::size_t g) {
      objs[g] = loocv_mse(X, y, KernelParams{expand(config.grid[g].first)},
                          config.grid[g].second);
    });
    for (std::size_t g = 0; g < config.grid.size(); ++g) {
      if (objs[g] < best) {
        best = objs[g];
        best_idx = g;
      }
    }
    out.params.gamma = expand(config.grid[best_idx].first);
    out.lambda = config.grid[best_idx].second;
    out.objective = best;
    out.evaluations = static_cast<long long>(config.grid.size());
    return out;
  }

  const int starts = std::max(1, config.starts);
  std::vector<StartResult> results(static_cast<std::size_t>(starts));
  parallel_for(static_cast<std::size_t>(starts), config.threads, [&](std::size_t s) {
    results[s] = run_start(X, y, config, derive_seed(config.seed, 0x6b7272, s));
  });
  std::size_t best_idx = 0;
  for (std::size_t s = 1; s < results.size(); ++s)
    if (results[s].objective < results[best_idx].objective) best_idx = s;
  const StartResult& w = results[best_idx];
  out.params.gamma = w.log_gamma.array().exp();
  out.lambda = std::exp(w.log_lambda);
  out.objective = w.objective;
  for (const auto& r : results) out.evaluations += r.evals;
  return out;
}

}  // namespace dtr
