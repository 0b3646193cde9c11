#pragma once

#include "windvol/core.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace windvol {

/// h_t = omega + alpha e_{t-1}^2 + beta h_{t-1}
struct GarchParams {
  double omega = 0.1;
  double alpha = 0.05;
  double beta = 0.85;
};

/// ln h_t = omega + beta ln h_{t-1} + alpha (|z_{t-1}| - sqrt(2/pi)) + gamma z_{t-1}
struct EgarchParams {
  double omega = 0.0;
  double alpha = 0.1;
  double gamma = 0.0;
  double beta = 0.85;
};

enum class UniModel { garch, egarch };
std::string_view to_string(UniModel m);

/// How h_1 is chosen when filtering.
enum class VarianceInit { sample_variance, unconditional };

enum class Criterion { aic, bic };

struct UniOptions {
  VarianceInit init = VarianceInit::sample_variance;
  int max_iterations = 500;
};

struct UniFit {
  UniModel model = UniModel::garch;
  /// GARCH: (omega, alpha, beta). EGARCH: (omega, alpha, gamma, beta).
  Vector params;
  Vector std_errors;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  double h0 = 0.0;  // initial variance used for the fit
  Vector h;
  Vector std_resid;
  bool converged = false;
  int iterations = 0;

  GarchParams garch() const;
  EgarchParams egarch() const;
  /// alpha + beta for GARCH, beta for EGARCH.
  double persistence() const;
  std::vector<std::string> param_names() const;
};

inline constexpr double kGarchSumCap = 0.9999;
/// E|z| for a standard normal.
inline const double kAbsNormalMean = std::sqrt(2.0 / kPi);

void validate(const GarchParams& p);
void validate(const EgarchParams& p);

Vector garch_filter(const GarchParams& p, std::span<const double> e, double h0);
double garch_loglik(const GarchParams& p, std::span<const double> e, double h0);
/// Variance at t = 1 for the chosen policy.
double garch_initial_variance(const GarchParams& p, std::span<const double> e, VarianceInit init);

Vector egarch_filter(const EgarchParams& p, std::span<const double> e, double h0);
double egarch_loglik(const EgarchParams& p, std::span<const double> e, double h0);
double egarch_initial_variance(const EgarchParams& p, std::span<const double> e, VarianceInit init);

UniFit fit_garch(std::span<const double> e, const UniOptions& opts = {});
UniFit fit_egarch(std::span<const double> e, const UniOptions& opts = {});

/// One-step-ahead variance from the last residual and variance.
double uni_forecast(const UniFit& fit, double e_last, double h_last);

/// Variance path of a fitted model over a longer series with parameters held
/// fixed; entry t is the forecast made with information up to t - 1.
Vector uni_filter(const UniFit& fit, std::span<const double> e);

/// Percentage of stations whose EGARCH criterion is strictly lower. Ties go
/// to GARCH.
double model_preference(const std::vector<UniFit>& garch, const std::vector<UniFit>& egarch,
                        Criterion criterion);

Vector simulate_garch(const GarchParams& p, Eigen::Index T, std::uint64_t seed,
                      Eigen::Index burn_in = 500);
Vector simulate_egarch(const EgarchParams& p, Eigen::Index T, std::uint64_t seed,
                       Eigen::Index burn_in = 500);

}  // namespace windvol
