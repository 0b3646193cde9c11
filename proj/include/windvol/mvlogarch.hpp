#pragma once

#include "windvol/core.hpp"
#include "windvol/weights.hpp"

#include <array>
#include <cstdint>

namespace windvol {

/// One T x N matrix per height (index 0 = 10 m, 1 = 100 m).
using HeightPair = std::array<Matrix, 2>;

/// Bivariate simultaneous spatial system on N x 2 cross-sections:
///   Y_t = 1 c' + W Y_t Psi + Y_{t-1} Pi + U_t
/// Used for the mean (c = beta_mu) and, on log-squared residuals, for the
/// volatility (c = A).
struct MvSystem {
  Eigen::Vector2d intercept = Eigen::Vector2d::Zero();
  Eigen::Matrix2d psi = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d pi = Eigen::Matrix2d::Zero();
};
using MvMeanParams = MvSystem;
using MvVolParams = MvSystem;

/// ln det(I_2N - Psi' (x) W).
double mv_log_det(const WeightMatrix& w, const Eigen::Matrix2d& psi);

/// Spectral radius of Y -> W Y Psi, by power iteration.
double mv_spectral_radius(const WeightMatrix& w, const Eigen::Matrix2d& psi);

/// Solves Y = 1 c' + W Y Psi + B for Y (N x 2).
Matrix mv_solve(const WeightMatrix& w, const MvSystem& p, const Matrix& rhs_without_spatial);

struct LogSquared {
  HeightPair values;
  double floor = 0.0;
  Eigen::Index floored = 0;
};

/// ln(max(eps^2, floor)) with floor = 1e-10 times the median of eps^2 over
/// both heights (the median of the positive cells if that median is zero).
LogSquared log_sq_transform(const HeightPair& eps);

struct MvOptions {
  /// Spatial term at t - 1 instead of t (volatility stage only).
  bool lagged_spatial = false;
  int max_iterations = 300;
};

struct MvFit {
  MvSystem params;
  Eigen::Vector2d sigma2 = Eigen::Vector2d::Zero();
  Eigen::Vector2d intercept_se = Eigen::Vector2d::Zero();
  Eigen::Matrix2d psi_se = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d pi_se = Eigen::Matrix2d::Zero();
  double loglik = 0.0;
  double spectral_radius = 0.0;
  bool lagged_spatial = false;
  bool converged = false;
  HeightPair residuals;  // (T-1) x N per height
};

/// Gaussian QML of the system with per-height error variances; Psi is found
/// numerically, the rest is concentrated out by least squares.
MvFit fit_mv_system(const HeightPair& y, const WeightMatrix& w, const MvOptions& opts = {});

/// Mean stage on deseasonalised data. The spatial term is always
/// contemporaneous here.
MvFit fit_mv_mean(const HeightPair& y, const WeightMatrix& w, int max_iterations = 300);

/// Residuals U_t (t = 2..T) for fixed parameters.
HeightPair mv_residuals(const MvSystem& p, const WeightMatrix& w, const HeightPair& y, bool lagged_spatial = false);

struct MvVolFit {
  MvFit system;
  LogSquared log_sq;
  HeightPair log_h;  // fitted log-variances for t = 2..T
};

/// Volatility stage on the log-squared mean residuals.
MvVolFit fit_mv_logarch(const HeightPair& eps, const WeightMatrix& w, const MvOptions& opts = {});

/// One-step-ahead variances (N x 2) given the last row of log-squared residuals.
Matrix mv_forecast(const MvSystem& vol, const WeightMatrix& w, const Vector& log_sq_last_h10,
                   const Vector& log_sq_last_h100, bool lagged_spatial = false);

/// Rolling one-step-ahead variances for rows 2..T of `log_sq`, (T-1) x N per height.
HeightPair mv_forecast_path(const MvSystem& vol, const WeightMatrix& w, const HeightPair& log_sq,
                            bool lagged_spatial = false);

/// Point forecast of the mean system given the last observed row.
Matrix mv_mean_forecast(const MvSystem& mean, const WeightMatrix& w, const Vector& last_h10,
                        const Vector& last_h100);

/// Mean system with Gaussian errors of standard deviation sigma[k].
HeightPair mv_simulate_mean(const MvSystem& p, const WeightMatrix& w, Eigen::Index T, Eigen::Index burn_in,
                            const Eigen::Vector2d& sigma, std::uint64_t seed);

/// Residuals whose log-squares follow the volatility system with centred
/// ln chi-square(1) disturbances.
HeightPair mv_simulate_logarch(const MvSystem& p, const WeightMatrix& w, Eigen::Index T, Eigen::Index burn_in,
                               std::uint64_t seed, bool lagged_spatial = false);

/// E[ln z^2] for standard normal z.
inline constexpr double kLogChiSqMean = -1.2703628454614782;

}  // namespace windvol
