#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "dtr/common.hpp"

namespace dtr {

/// Anisotropic Gaussian kernel K(x,z) = exp(-sum_j gamma_j (x_j - z_j)^2).
/// One positive scale per coordinate, so irrelevant covariates can be
/// suppressed by driving their gamma toward zero.
struct KernelParams {
  Eigen::VectorXd gamma;
};

double kernel_eval(const KernelParams& params, const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& z);

/// Symmetric gram matrix with unit diagonal; entries are computed once per
/// unordered pair and mirrored, so K(i,j) == K(j,i) exactly.
Eigen::MatrixXd gram_matrix(const KernelParams& params,
                            const Eigen::Ref<const Eigen::MatrixXd>& X);

/// Kernel ridge fit for one (stage, action) cell. Predictions are clipped to
/// [-clip_bound, clip_bound].
struct KrrModel {
  Eigen::MatrixXd support;  // training covariates, n_a x d
  Eigen::VectorXd beta;     // n_a coefficients
  KernelParams params;
  double lambda = 0.0;
  double clip_bound = 0.0;  // B

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd predict_many(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
};

/// Solves (K + n_a * lambda * I) beta = y by Cholesky. Singular systems get
/// escalating diagonal jitter (1e-12 up to 1e-6); if the residual against the
/// unjittered system still exceeds 1e-8 * ||y||, throws Error("krr_solve").
/// lambda = 0 is permitted and relies on the jitter path.
KrrModel fit_krr(const Eigen::Ref<const Eigen::MatrixXd>& X,
                 const Eigen::Ref<const Eigen::VectorXd>& y, const KernelParams& params,
                 double lambda, double clip_bound);

/// Leave-one-out mean squared error via the closed form
///   e_i = z_i / d_i,  z = (K + n lambda I)^{-1} y,  d = diag((K + n lambda I)^{-1}),
/// which equals refitting without observation i at the same absolute ridge
/// n * lambda. Falls back to the explicit refit for any i whose leverage is
/// numerically >= 1.
double loocv_mse(const Eigen::Ref<const Eigen::MatrixXd>& X,
                 const Eigen::Ref<const Eigen::VectorXd>& y, const KernelParams& params,
                 double lambda);

struct KrrTuneConfig {
  double log_gamma_min = -8.0;
  double log_gamma_max = 8.0;
  double log_lambda_min = -12.0;
  double log_lambda_max = 2.0;
  int starts = 3;
  int sweeps = 40;  // coordinate-descent passes per start
  double rel_tol = 1e-7;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Grid-only mode: when nonempty the search just evaluates these
  /// (gamma, lambda) pairs and returns the best (first wins ties).
  std::vector<std::pair<Eigen::VectorXd, double>> grid;
};

struct KrrTuneResult {
  KernelParams params;
  double lambda = 1.0;
  double objective = 0.0;  // LOOCV MSE at the returned point
  bool degenerate = false;  // y had zero variance; defaults returned
  long long evaluations = 0;
};

/// Minimizes LOOCV MSE over (log gamma, log lambda) with multi-start
/// derivative-free coordinate descent on the configured box. Deterministic
/// given the seed; starts are reduced by (objective, start index).
KrrTuneResult tune_krr(const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& y, const KrrTuneConfig& config);

/// Scale heuristic used for default/start values: gamma_j ~ 1/(d * var_j).
Eigen::VectorXd default_gamma(const Eigen::Ref<const Eigen::MatrixXd>& X);

}  // namespace dtr
