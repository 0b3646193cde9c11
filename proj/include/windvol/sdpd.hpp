#pragma once

#include "windvol/core.hpp"
#include "windvol/weights.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace windvol {

/// y_t = rho W y_t + gamma .* y_{t-1} + lambda W y_{t-1} + c + eps_t
/// `intercept` (c) is empty when the model is fitted without one.
struct SdpdParams {
  double rho = 0.0;
  Vector gamma;
  double lambda = 0.0;
  Vector intercept;
};

/// ln|det(I - rho W)| from a dense LU factorisation. Throws SingularSystem
/// when the determinant is not positive.
double sdpd_log_det(const WeightMatrix& w, double rho);

/// Residuals eps_t for t = 2..T, (T-1) x N.
Matrix sdpd_residuals(const SdpdParams& p, const WeightMatrix& w, const Matrix& y);

/// Gaussian log-likelihood of rows 2..T with the Jacobian term.
double sdpd_loglik(const SdpdParams& p, const WeightMatrix& w, const Matrix& y, double sigma2);

struct SdpdOptions {
  bool intercept = true;
  double grid_step = 0.02;
  double tolerance = 1e-8;
  int threads = 1;
};

struct SdpdFit {
  SdpdParams params;
  double sigma2 = 0.0;
  double loglik = 0.0;
  Matrix residuals;  // (T-1) x N
  /// False when W has no links, so lambda is not identified and is set to 0.
  bool lambda_identified = true;
};

/// Concentrated QML: rho by grid search refined with golden-section, the
/// remaining coefficients by least squares given rho.
SdpdFit fit_sdpd(const Matrix& y, const WeightMatrix& w, const SdpdOptions& opts = {},
                 const std::vector<std::string>& station_ids = {});

/// Draws T rows after `burn_in` discarded ones, starting from y_0 = 0.
Matrix sdpd_simulate(const SdpdParams& p, const WeightMatrix& w, Eigen::Index T,
                     Eigen::Index burn_in, double sigma, std::uint64_t seed);

}  // namespace windvol
