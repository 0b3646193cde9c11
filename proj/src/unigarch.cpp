#include "windvol/unigarch.hpp"

#include "windvol/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace windvol {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInf = std::numeric_limits<double>::infinity();

double sample_variance(std::span<const double> e) {
  double mean = 0.0;
  for (double v : e) mean += v;
  mean /= static_cast<double>(e.size());
  double ss = 0.0;
  for (double v : e) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(e.size());
}

void check_input(std::span<const double> e) {
  if (e.size() < 100) throw Error(Errc::TooFewObservations, "univariate fit needs T >= 100");
  for (double v : e)
    if (!std::isfinite(v)) throw Error(Errc::NonFinite, "non-finite residual");
  const double var = sample_variance(e);
  double scale = 0.0;
  for (double v : e) scale = std::max(scale, std::abs(v));
  if (!(var > 1e-20 * std::max(1.0, scale * scale))) throw Error(Errc::DegenerateInput, "constant input");
}

// (log omega, u1, u2) -> (omega, alpha, beta) with alpha, beta > 0 and
// alpha + beta < kGarchSumCap.
GarchParams garch_from_free(const Vector& x) {
  const double m = std::max({0.0, x[1], x[2]});
  const double e0 = std::exp(-m), e1 = std::exp(x[1] - m), e2 = std::exp(x[2] - m);
  const double s = e0 + e1 + e2;
  return {std::exp(x[0]), kGarchSumCap * e1 / s, kGarchSumCap * e2 / s};
}

Vector garch_to_free(const GarchParams& p) {
  const double slack = 1.0 - (p.alpha + p.beta) / kGarchSumCap;
  Vector x(3);
  x << std::log(p.omega), std::log(p.alpha / (kGarchSumCap * slack)),
      std::log(p.beta / (kGarchSumCap * slack));
  return x;
}

constexpr double kEgarchBetaCap = 0.9999;

EgarchParams egarch_from_free(const Vector& x) {
  return {x[0], x[1], x[2], kEgarchBetaCap * std::tanh(x[3])};
}

Vector egarch_to_free(const EgarchParams& p) {
  Vector x(4);
  x << p.omega, p.alpha, p.gamma, std::atanh(p.beta / kEgarchBetaCap);
  return x;
}

void finish_fit(UniFit& fit, std::span<const double> e, Eigen::Index k) {
  const auto T = static_cast<double>(e.size());
  fit.aic = -2.0 * fit.loglik + 2.0 * static_cast<double>(k);
  fit.bic = -2.0 * fit.loglik + static_cast<double>(k) * std::log(T);
  fit.std_resid.resize(fit.h.size());
  for (Eigen::Index t = 0; t < fit.h.size(); ++t) fit.std_resid[t] = e[t] / std::sqrt(fit.h[t]);
}

}  // namespace

std::string_view to_string(UniModel m) { return m == UniModel::garch ? "garch" : "egarch"; }

GarchParams UniFit::garch() const { return {params[0], params[1], params[2]}; }
EgarchParams UniFit::egarch() const { return {params[0], params[1], params[2], params[3]}; }

double UniFit::persistence() const {
  return model == UniModel::garch ? params[1] + params[2] : params[3];
}

std::vector<std::string> UniFit::param_names() const {
  if (model == UniModel::garch) return {"omega", "alpha", "beta"};
  return {"omega", "alpha", "gamma", "beta"};
}

void validate(const GarchParams& p) {
  if (!(p.omega > 0.0) || !(p.alpha >= 0.0) || !(p.beta >= 0.0))
    throw Error(Errc::InvalidArgument, "GARCH requires omega > 0, alpha >= 0, beta >= 0");
}

void validate(const EgarchParams& p) {
  if (!std::isfinite(p.omega) || !std::isfinite(p.alpha) || !std::isfinite(p.gamma) ||
      !(std::abs(p.beta) < 1.0))
    throw Error(Errc::InvalidArgument, "EGARCH requires finite parameters and |beta| < 1");
}

double garch_initial_variance(const GarchParams& p, std::span<const double> e, VarianceInit init) {
  if (init == VarianceInit::unconditional) {
    if (!(p.alpha + p.beta < 1.0))
      throw Error(Errc::InvalidArgument, "unconditional variance needs alpha + beta < 1");
    return p.omega / (1.0 - p.alpha - p.beta);
  }
  return sample_variance(e);
}

double egarch_initial_variance(const EgarchParams& p, std::span<const double> e, VarianceInit init) {
  if (init == VarianceInit::unconditional) return std::exp(p.omega / (1.0 - p.beta));
  return sample_variance(e);
}

Vector garch_filter(const GarchParams& p, std::span<const double> e, double h0) {
  validate(p);
  const auto T = static_cast<Eigen::Index>(e.size());
  Vector h(T);
  if (T == 0) return h;
  h[0] = h0;
  for (Eigen::Index t = 1; t < T; ++t) h[t] = p.omega + p.alpha * e[t - 1] * e[t - 1] + p.beta * h[t - 1];
  return h;
}

double garch_loglik(const GarchParams& p, std::span<const double> e, double h0) {
  const Vector h = garch_filter(p, e, h0);
  double ll = 0.0;
  for (Eigen::Index t = 0; t < h.size(); ++t) ll -= 0.5 * (kLog2Pi + std::log(h[t]) + e[t] * e[t] / h[t]);
  return ll;
}

Vector egarch_filter(const EgarchParams& p, std::span<const double> e, double h0) {
  validate(p);
  const auto T = static_cast<Eigen::Index>(e.size());
  Vector h(T);
  if (T == 0) return h;
  double lh = std::log(h0);
  h[0] = h0;
  for (Eigen::Index t = 1; t < T; ++t) {
    const double z = e[t - 1] / std::sqrt(h[t - 1]);
    lh = p.omega + p.beta * lh + p.alpha * (std::abs(z) - kAbsNormalMean) + p.gamma * z;
    h[t] = std::exp(lh);
  }
  return h;
}

double egarch_loglik(const EgarchParams& p, std::span<const double> e, double h0) {
  const Vector h = egarch_filter(p, e, h0);
  double ll = 0.0;
  for (Eigen::Index t = 0; t < h.size(); ++t) ll -= 0.5 * (kLog2Pi + std::log(h[t]) + e[t] * e[t] / h[t]);
  return ll;
}

UniFit fit_garch(std::span<const double> e, const UniOptions& opts) {
  check_input(e);
  const double var = sample_variance(e);
  const double T = static_cast<double>(e.size());
  const GarchParams start{0.1 * var, 0.05, 0.85};

  auto objective = [&](const Vector& x) {
    const auto p = garch_from_free(x);
    const double h0 = opts.init == VarianceInit::unconditional
                          ? p.omega / (1.0 - p.alpha - p.beta)
                          : var;
    const double ll = garch_loglik(p, e, h0);
    return std::isfinite(ll) ? -ll / T : kInf;
  };
  optim::Options oo;
  oo.max_iterations = opts.max_iterations;
  const auto res = optim::minimize_bfgs(objective, garch_to_free(start), oo);
  if (!std::isfinite(res.value)) throw Error(Errc::NonConvergence, "GARCH fit: " + res.message);

  UniFit fit;
  fit.model = UniModel::garch;
  const auto p = garch_from_free(res.x);
  fit.params.resize(3);
  fit.params << p.omega, p.alpha, p.beta;
  fit.h0 = garch_initial_variance(p, e, opts.init);
  fit.h = garch_filter(p, e, fit.h0);
  fit.loglik = garch_loglik(p, e, fit.h0);
  fit.converged = res.converged;
  fit.iterations = res.iterations;

  // Hessian in the natural parameters with h0 held at its fitted value.
  const double h0 = fit.h0;
  auto nll = [&](const Vector& q) {
    if (!(q[0] > 0.0) || q[1] < 0.0 || q[2] < 0.0) return kInf;
    return -garch_loglik({q[0], q[1], q[2]}, e, h0);
  };
  constexpr double step = 1e-4;
  if (p.alpha > 2 * step && p.beta > 2 * step && p.omega > 2 * step * std::max(1.0, p.omega)) {
    fit.std_errors = optim::standard_errors(optim::numerical_hessian(nll, fit.params, step));
  } else {
    fit.std_errors = Vector::Constant(3, std::numeric_limits<double>::quiet_NaN());
  }
  finish_fit(fit, e, 3);
  return fit;
}

UniFit fit_egarch(std::span<const double> e, const UniOptions& opts) {
  check_input(e);
  const double var = sample_variance(e);
  const double T = static_cast<double>(e.size());
  const EgarchParams start{(1.0 - 0.85) * std::log(var), 0.1, 0.0, 0.85};

  auto objective = [&](const Vector& x) {
    const auto p = egarch_from_free(x);
    const double h0 = opts.init == VarianceInit::unconditional ? std::exp(p.omega / (1.0 - p.beta)) : var;
    if (!std::isfinite(h0) || !(h0 > 0.0)) return kInf;
    const double ll = egarch_loglik(p, e, h0);
    return std::isfinite(ll) ? -ll / T : kInf;
  };
  optim::Options oo;
  oo.max_iterations = opts.max_iterations;
  const auto res = optim::minimize_bfgs(objective, egarch_to_free(start), oo);
  if (!std::isfinite(res.value)) throw Error(Errc::NonConvergence, "EGARCH fit: " + res.message);

  UniFit fit;
  fit.model = UniModel::egarch;
  const auto p = egarch_from_free(res.x);
  fit.params.resize(4);
  fit.params << p.omega, p.alpha, p.gamma, p.beta;
  fit.h0 = egarch_initial_variance(p, e, opts.init);
  fit.h = egarch_filter(p, e, fit.h0);
  fit.loglik = egarch_loglik(p, e, fit.h0);
  fit.converged = res.converged;
  fit.iterations = res.iterations;

  const double h0 = fit.h0;
  auto nll = [&](const Vector& q) {
    if (!(std::abs(q[3]) < 1.0)) return kInf;
    const double ll = egarch_loglik({q[0], q[1], q[2], q[3]}, e, h0);
    return std::isfinite(ll) ? -ll : kInf;
  };
  fit.std_errors = optim::standard_errors(optim::numerical_hessian(nll, fit.params, 1e-4));
  finish_fit(fit, e, 4);
  return fit;
}

double uni_forecast(const UniFit& fit, double e_last, double h_last) {
  if (fit.model == UniModel::garch) {
    const auto p = fit.garch();
    return p.omega + p.alpha * e_last * e_last + p.beta * h_last;
  }
  const auto p = fit.egarch();
  const double z = e_last / std::sqrt(h_last);
  return std::exp(p.omega + p.beta * std::log(h_last) + p.alpha * (std::abs(z) - kAbsNormalMean) +
                  p.gamma * z);
}

Vector uni_filter(const UniFit& fit, std::span<const double> e) {
  return fit.model == UniModel::garch ? garch_filter(fit.garch(), e, fit.h0)
                                      : egarch_filter(fit.egarch(), e, fit.h0);
}

double model_preference(const std::vector<UniFit>& garch, const std::vector<UniFit>& egarch,
                        Criterion criterion) {
  if (garch.size() != egarch.size())
    throw Error(Errc::DimensionMismatch, "GARCH and EGARCH fit lists differ in length");
  if (garch.empty()) throw Error(Errc::EmptyList, "no fits to compare");
  std::size_t prefer = 0;
  for (std::size_t i = 0; i < garch.size(); ++i) {
    const double g = criterion == Criterion::aic ? garch[i].aic : garch[i].bic;
    const double eg = criterion == Criterion::aic ? egarch[i].aic : egarch[i].bic;
    if (eg < g) ++prefer;
  }
  return 100.0 * static_cast<double>(prefer) / static_cast<double>(garch.size());
}

Vector simulate_garch(const GarchParams& p, Eigen::Index T, std::uint64_t seed, Eigen::Index burn_in) {
  validate(p);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double h = p.alpha + p.beta < 1.0 ? p.omega / (1.0 - p.alpha - p.beta) : p.omega;
  double e = 0.0;
  Vector out(T);
  for (Eigen::Index t = -burn_in; t < T; ++t) {
    h = p.omega + p.alpha * e * e + p.beta * h;
    e = std::sqrt(h) * normal(rng);
    if (t >= 0) out[t] = e;
  }
  return out;
}

Vector simulate_egarch(const EgarchParams& p, Eigen::Index T, std::uint64_t seed, Eigen::Index burn_in) {
  validate(p);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double lh = p.omega / (1.0 - p.beta);
  double z = 0.0;
  Vector out(T);
  for (Eigen::Index t = -burn_in; t < T; ++t) {
    lh = p.omega + p.beta * lh + p.alpha * (std::abs(z) - kAbsNormalMean) + p.gamma * z;
    z = normal(rng);
    if (t >= 0) out[t] = std::exp(0.5 * lh) * z;
  }
  return out;
}

}  // namespace windvol
