#include "windvol/stgarch.hpp"

#include "windvol/diagnostics.hpp"
#include "windvol/optim.hpp"
#include "windvol/parallel.hpp"
#include "windvol/unigarch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace windvol {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kCoefCap = 0.999;

// Both paths are N x T (stations in rows) to keep the recursions contiguous.
struct Paths {
  Matrix eps;
  Matrix h;
};

Paths filter_paths(const StarmaGarchParams& p, const WeightMatrix& w, const Matrix& e,
                   const std::optional<Vector>& h1) {
  const auto T = e.rows();
  const auto N = e.cols();
  const auto& S = w.sparse();
  const Matrix x = (e.array() - p.mu).matrix().transpose();
  const Matrix wx = S * x;

  Paths out;
  out.eps.resize(N, T);
  out.h.resize(N, T);
  if (T == 0) return out;
  out.eps.col(0) = x.col(0);
  for (Eigen::Index t = 1; t < T; ++t)
    out.eps.col(t) = x.col(t) - p.phi * wx.col(t - 1) - p.theta * (S * out.eps.col(t - 1));

  if (h1) {
    if (h1->size() != N) throw Error(Errc::ShapeMismatch, "initial variance length");
    out.h.col(0) = *h1;
  } else {
    const Vector mean = out.eps.rowwise().mean();
    out.h.col(0) = (out.eps.colwise() - mean).rowwise().squaredNorm() / static_cast<double>(T);
  }
  const Vector omega = p.omega_vector(N);
  const Matrix weps2 = S * out.eps.cwiseAbs2();
  for (Eigen::Index t = 1; t < T; ++t)
    out.h.col(t) = omega + p.alpha * weps2.col(t - 1) + p.beta * (S * out.h.col(t - 1));
  return out;
}

double paths_loglik(const Paths& paths) {
  double ll = 0.0;
  for (Eigen::Index t = 0; t < paths.h.cols(); ++t) {
    for (Eigen::Index i = 0; i < paths.h.rows(); ++i) {
      const double h = paths.h(i, t);
      if (!(h > 0.0)) return -kInf;
      const double z = paths.eps(i, t);
      ll -= 0.5 * (kLog2Pi + std::log(h) + z * z / h);
    }
  }
  return ll;
}

void check_shapes(const WeightMatrix& w, const Matrix& e) {
  if (e.cols() != w.n()) throw Error(Errc::ShapeMismatch, "panel columns do not match weight matrix");
}

// Free-parameter layout: mu, atanh(phi/c), atanh(theta/c), u_alpha, u_beta,
// then log omega (one entry, or one per station).
struct Layout {
  Eigen::Index n_omega = 1;
  Eigen::Index size() const { return 5 + n_omega; }
};

StarmaGarchParams from_free(const Vector& x, const Layout& lay) {
  StarmaGarchParams p;
  p.mu = x[0];
  p.phi = kCoefCap * std::tanh(x[1]);
  p.theta = kCoefCap * std::tanh(x[2]);
  const double m = std::max({0.0, x[3], x[4]});
  const double e0 = std::exp(-m), ea = std::exp(x[3] - m), eb = std::exp(x[4] - m);
  const double s = e0 + ea + eb;
  p.alpha = kGarchSumCap * ea / s;
  p.beta = kGarchSumCap * eb / s;
  if (lay.n_omega == 1) {
    p.omega = std::exp(x[5]);
  } else {
    p.omega_station = x.tail(lay.n_omega).array().exp();
    p.omega = p.omega_station.mean();
  }
  return p;
}

Vector to_free(const StarmaGarchParams& p, const Layout& lay) {
  Vector x(lay.size());
  const double slack = 1.0 - (p.alpha + p.beta) / kGarchSumCap;
  x[0] = p.mu;
  x[1] = std::atanh(std::clamp(p.phi / kCoefCap, -0.999999, 0.999999));
  x[2] = std::atanh(std::clamp(p.theta / kCoefCap, -0.999999, 0.999999));
  x[3] = std::log(std::max(p.alpha, 1e-8) / (kGarchSumCap * slack));
  x[4] = std::log(std::max(p.beta, 1e-8) / (kGarchSumCap * slack));
  if (lay.n_omega == 1) {
    x[5] = std::log(p.omega);
  } else {
    for (Eigen::Index i = 0; i < lay.n_omega; ++i)
      x[5 + i] = std::log(p.omega_station.size() ? p.omega_station[i] : p.omega);
  }
  return x;
}

StarmaGarchParams start_point(int k, std::uint64_t seed, double mean, double var, const Layout& lay,
                              Eigen::Index N) {
  StarmaGarchParams p;
  p.mu = mean;
  if (k == 0) {
    p.phi = 0.0;
    p.theta = 0.0;
    p.alpha = 0.05;
    p.beta = 0.85;
  } else {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(k) - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    p.phi = -0.6 + 1.2 * u(rng);
    p.theta = -0.6 + 1.2 * u(rng);
    p.alpha = 0.02 + 0.28 * u(rng);
    p.beta = (0.95 - p.alpha) * (0.1 + 0.85 * u(rng));
  }
  p.omega = var * (1.0 - p.alpha - p.beta);
  if (lay.n_omega > 1) p.omega_station = Vector::Constant(N, p.omega);
  return p;
}

}  // namespace

Vector StarmaGarchParams::omega_vector(Eigen::Index n) const {
  if (omega_station.size() == 0) return Vector::Constant(n, omega);
  if (omega_station.size() != n) throw Error(Errc::ShapeMismatch, "station intercept length");
  return omega_station;
}

void validate(const StarmaGarchParams& p) {
  const bool omega_ok = p.omega_station.size() == 0 ? p.omega > 0.0
                                                    : (p.omega_station.array() > 0.0).all();
  if (!omega_ok || !(p.alpha >= 0.0) || !(p.beta >= 0.0) || !(p.alpha + p.beta < 1.0) ||
      !(std::abs(p.phi) < 1.0) || !(std::abs(p.theta) < 1.0) || !std::isfinite(p.mu))
    throw Error(Errc::InvalidArgument,
                "STARMAGARCH parameters violate omega > 0, alpha, beta >= 0, alpha + beta < 1, "
                "|phi| < 1, |theta| < 1");
}

StFilterResult st_filter(const StarmaGarchParams& p, const WeightMatrix& w, const Matrix& e,
                         const std::optional<Vector>& h1) {
  validate(p);
  check_shapes(w, e);
  auto paths = filter_paths(p, w, e, h1);
  return {paths.eps.transpose(), paths.h.transpose()};
}

double st_loglik(const StarmaGarchParams& p, const WeightMatrix& w, const Matrix& e,
                 const std::optional<Vector>& h1) {
  validate(p);
  check_shapes(w, e);
  return paths_loglik(filter_paths(p, w, e, h1));
}

StSimulation st_simulate(const StarmaGarchParams& p, const WeightMatrix& w, Eigen::Index T,
                         Eigen::Index burn_in, std::uint64_t seed) {
  validate(p);
  const auto N = w.n();
  const auto& S = w.sparse();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  const Vector omega = p.omega_vector(N);
  // start at the stationary level of a node with a full neighbourhood
  Vector h = omega / (1.0 - p.alpha - p.beta);
  Vector eps = Vector::Zero(N);
  Vector dev = Vector::Zero(N);  // e_{t-1} - mu

  StSimulation sim;
  sim.e.resize(T, N);
  sim.eps.resize(T, N);
  sim.h.resize(T, N);
  for (Eigen::Index t = -burn_in; t < T; ++t) {
    const Vector h_new = omega + p.alpha * (S * eps.cwiseAbs2()) + p.beta * (S * h);
    Vector eps_new(N);
    for (Eigen::Index i = 0; i < N; ++i) eps_new[i] = std::sqrt(h_new[i]) * normal(rng);
    const Vector dev_new = p.phi * (S * dev) + p.theta * (S * eps) + eps_new;
    h = h_new;
    eps = eps_new;
    dev = dev_new;
    if (t >= 0) {
      sim.h.row(t) = h.transpose();
      sim.eps.row(t) = eps.transpose();
      sim.e.row(t) = (dev.array() + p.mu).matrix().transpose();
    }
  }
  return sim;
}

StFit fit_st(const Matrix& e, const WeightMatrix& w, const StOptions& opts) {
  check_shapes(w, e);
  const auto T = e.rows();
  const auto N = e.cols();
  if (N < 2) throw Error(Errc::TooFewObservations, "STARMAGARCH needs at least two stations");
  if (T < 50) throw Error(Errc::NonConvergence, "STARMAGARCH cannot be estimated from fewer than 50 periods");
  if (!e.allFinite()) throw Error(Errc::NonFinite, "non-finite residuals");

  const double mean = e.mean();
  const double var = (e.array() - mean).square().mean();
  if (!(var > 0.0)) throw Error(Errc::DegenerateInput, "constant residual panel");

  Layout lay;
  lay.n_omega = opts.station_omega ? N : 1;
  const double cells = static_cast<double>(T * N);

  auto objective = [&](const Vector& x) {
    const auto p = from_free(x, lay);
    const double ll = paths_loglik(filter_paths(p, w, e, std::nullopt));
    return std::isfinite(ll) ? -ll / cells : kInf;
  };

  const int starts = std::max(1, opts.starts);
  std::vector<optim::Result> results(static_cast<std::size_t>(starts));
  parallel_for(results.size(), opts.threads, [&](std::size_t k) {
    optim::Options oo;
    oo.max_iterations = opts.max_iterations;
    results[k] = optim::minimize_bfgs(
        objective, to_free(start_point(static_cast<int>(k), opts.seed, mean, var, lay, N), lay), oo);
  });

  StFit fit;
  for (std::size_t k = 0; k < results.size(); ++k) {
    fit.start_logliks.push_back(-results[k].value * cells);
    if (results[k].value < results[static_cast<std::size_t>(fit.best_start)].value)
      fit.best_start = static_cast<int>(k);
  }
  const auto& best = results[static_cast<std::size_t>(fit.best_start)];
  if (!std::isfinite(best.value)) throw Error(Errc::NonConvergence, "STARMAGARCH: " + best.message);

  fit.params = from_free(best.x, lay);
  fit.converged = best.converged;
  const auto paths = filter_paths(fit.params, w, e, std::nullopt);
  fit.loglik = paths_loglik(paths);
  fit.h1 = paths.h.col(0);
  fit.h_path = paths.h.transpose();
  fit.eps_path = paths.eps.transpose();

  const auto& p = fit.params;
  fit.names = {"mu", "phi", "theta", "omega", "alpha", "beta"};
  fit.estimates.resize(6);
  fit.estimates << p.mu, p.phi, p.theta, p.omega, p.alpha, p.beta;
  if (opts.station_omega) {
    fit.names.erase(fit.names.begin() + 3);
    Vector est(5 + N);
    est << p.mu, p.phi, p.theta, p.alpha, p.beta, p.omega_station;
    for (Eigen::Index i = 0; i < N; ++i) fit.names.push_back("omega_" + std::to_string(i + 1));
    fit.estimates = est;
  }
  const auto k = fit.estimates.size();
  fit.boundary.assign(static_cast<std::size_t>(k), false);
  const auto alpha_idx = opts.station_omega ? 3 : 4;
  const auto beta_idx = alpha_idx + 1;
  fit.boundary[alpha_idx] = p.alpha < opts.boundary_tol;
  fit.boundary[beta_idx] = p.beta < opts.boundary_tol;

  // Hessian in the natural parameters over the interior ones. With station
  // intercepts only the five shared parameters are included (the intercepts
  // are held at their estimates).
  std::vector<Eigen::Index> free_idx;
  const Eigen::Index shared = opts.station_omega ? 5 : 6;
  for (Eigen::Index j = 0; j < shared; ++j)
    if (!fit.boundary[static_cast<std::size_t>(j)]) free_idx.push_back(j);
  const std::optional<Vector> h1 = fit.h1;
  auto natural = [&](const Vector& sub) {
    Vector full = fit.estimates;
    for (std::size_t j = 0; j < free_idx.size(); ++j) full[free_idx[j]] = sub[static_cast<Eigen::Index>(j)];
    StarmaGarchParams q = p;
    q.mu = full[0];
    q.phi = full[1];
    q.theta = full[2];
    if (opts.station_omega) {
      q.alpha = full[3];
      q.beta = full[4];
    } else {
      q.omega = full[3];
      q.alpha = full[4];
      q.beta = full[5];
    }
    if (!(q.alpha >= 0.0) || !(q.beta >= 0.0) || !(q.alpha + q.beta < 1.0) ||
        !(std::abs(q.phi) < 1.0) || !(std::abs(q.theta) < 1.0) || !(q.omega > 0.0))
      return kInf;
    const double ll = paths_loglik(filter_paths(q, w, e, h1));
    return std::isfinite(ll) ? -ll : kInf;
  };
  Vector sub(static_cast<Eigen::Index>(free_idx.size()));
  for (std::size_t j = 0; j < free_idx.size(); ++j) sub[static_cast<Eigen::Index>(j)] = fit.estimates[free_idx[j]];
  const Vector se_sub = optim::standard_errors(optim::numerical_hessian(natural, sub, 1e-4));

  fit.std_errors = Vector::Constant(k, kNaN);
  fit.p_values = Vector::Constant(k, kNaN);
  for (std::size_t j = 0; j < free_idx.size(); ++j) {
    const auto idx = free_idx[j];
    fit.std_errors[idx] = se_sub[static_cast<Eigen::Index>(j)];
    if (fit.std_errors[idx] > 0.0)
      fit.p_values[idx] = normal_two_sided(fit.estimates[idx] / fit.std_errors[idx]);
  }
  for (Eigen::Index j = 0; j < k; ++j)
    if (fit.boundary[static_cast<std::size_t>(j)]) fit.p_values[j] = 0.5;

  fit.aic = -2.0 * fit.loglik + 2.0 * static_cast<double>(k);
  fit.bic = -2.0 * fit.loglik + static_cast<double>(k) * std::log(cells);
  return fit;
}

Vector st_variance_step(const StarmaGarchParams& p, const WeightMatrix& w, const Vector& eps_last,
                        const Vector& h_last) {
  const auto N = w.n();
  if (eps_last.size() != N || h_last.size() != N)
    throw Error(Errc::ShapeMismatch, "state vectors do not match the weight matrix");
  return p.omega_vector(N) + p.alpha * w.apply(Vector(eps_last.cwiseAbs2())) + p.beta * w.apply(h_last);
}

Vector st_forecast(const StFit& fit, const Matrix& e_hist, const WeightMatrix& w) {
  const auto r = st_forecast_path(fit, e_hist, w);
  const auto T = r.eps.rows();
  if (T == 0) throw Error(Errc::TooShort, "empty history");
  return st_variance_step(fit.params, w, r.eps.row(T - 1).transpose(), r.h.row(T - 1).transpose());
}

StFilterResult st_forecast_path(const StFit& fit, const Matrix& e_all, const WeightMatrix& w) {
  std::optional<Vector> h1;
  if (fit.h1.size() == e_all.cols()) h1 = fit.h1;
  return st_filter(fit.params, w, e_all, h1);
}

}  // namespace windvol
