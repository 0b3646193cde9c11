#pragma once

#include "windvol/core.hpp"
#include "windvol/weights.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace windvol {

/// STARMAGARCH(1,1,1,1):
///   e_t - mu = phi W (e_{t-1} - mu) + theta W eps_{t-1} + eps_t
///   eps_t    = sqrt(h_t) .* Z_t
///   h_t      = omega + alpha W (eps_{t-1} .* eps_{t-1}) + beta W h_{t-1}
/// omega is a scalar unless `omega_station` holds one intercept per station.
struct StarmaGarchParams {
  double mu = 0.0;
  double phi = 0.0;
  double theta = 0.0;
  double omega = 0.1;
  double alpha = 0.05;
  double beta = 0.85;
  Vector omega_station;  // empty = shared scalar omega

  Vector omega_vector(Eigen::Index n) const;
};

/// Throws InvalidArgument unless omega > 0, alpha, beta >= 0,
/// alpha + beta < 1, |phi| < 1 and |theta| < 1.
void validate(const StarmaGarchParams& p);

struct StFilterResult {
  Matrix eps;  // T x N
  Matrix h;    // T x N
};

/// Inverts the mean recursion (eps_1 = e_1 - mu) and runs the variance
/// recursion. h_1 defaults to the column variances of the implied eps.
StFilterResult st_filter(const StarmaGarchParams& p, const WeightMatrix& w, const Matrix& e,
                         const std::optional<Vector>& h1 = std::nullopt);

/// Gaussian quasi log-likelihood summed over all cells.
double st_loglik(const StarmaGarchParams& p, const WeightMatrix& w, const Matrix& e,
                 const std::optional<Vector>& h1 = std::nullopt);

struct StSimulation {
  Matrix e;    // T x N observed panel
  Matrix eps;  // innovations
  Matrix h;    // conditional variances
};

StSimulation st_simulate(const StarmaGarchParams& p, const WeightMatrix& w, Eigen::Index T,
                         Eigen::Index burn_in, std::uint64_t seed);

struct StOptions {
  bool station_omega = false;
  int starts = 3;
  /// Start 0 is fixed; start k >= 1 is drawn from an RNG seeded with seed + k - 1.
  std::uint64_t seed = 1;
  int threads = 1;
  int max_iterations = 400;
  /// Estimates below this are reported as sitting on the zero bound.
  double boundary_tol = 1e-4;
};

struct StFit {
  StarmaGarchParams params;
  std::vector<std::string> names;  // mu, phi, theta, omega, alpha, beta (+ omega_<i>)
  Vector estimates;
  Vector std_errors;
  Vector p_values;
  std::vector<bool> boundary;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  Vector h1;       // initial variances used in estimation
  Matrix h_path;   // T x N
  Matrix eps_path; // T x N
  bool converged = false;
  int best_start = 0;
  std::vector<double> start_logliks;
};

StFit fit_st(const Matrix& e, const WeightMatrix& w, const StOptions& opts = {});

/// h_{T+1} = omega + alpha W (eps_T .* eps_T) + beta W h_T.
Vector st_variance_step(const StarmaGarchParams& p, const WeightMatrix& w, const Vector& eps_last,
                        const Vector& h_last);

/// One-step-ahead variance after filtering `e_hist` with the frozen fit.
Vector st_forecast(const StFit& fit, const Matrix& e_hist, const WeightMatrix& w);

/// Rolling one-step-ahead forecasts: filter the whole history with frozen
/// parameters (starting from the fit's h_1); row t of the result is the
/// variance forecast for day t made with data up to t - 1.
StFilterResult st_forecast_path(const StFit& fit, const Matrix& e_all, const WeightMatrix& w);

}  // namespace windvol
