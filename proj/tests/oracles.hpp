#pragma once
// Brute-force reference implementations used as test oracles. They work on
// plain dense arrays with explicit loops and share no code with the library.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;
inline constexpr double kLn2Pi = 1.83787706640934548356;

inline double normal_nll_term(double h, double e) { return -0.5 * (std::log(2.0 * M_PI) + std::log(h) + e * e / h); }

inline double garch_loglik(double omega, double alpha, double beta, const std::vector<double>& e, double h0) {
  double h = h0, ll = 0.0;
  for (std::size_t t = 0; t < e.size(); ++t) {
    if (t > 0) h = omega + alpha * e[t - 1] * e[t - 1] + beta * h;
    ll += normal_nll_term(h, e[t]);
  }
  return ll;
}

inline double egarch_loglik(double omega, double alpha, double gamma, double beta, const std::vector<double>& e,
                            double h0) {
  const double abs_mean = std::sqrt(2.0 / M_PI);
  double h = h0, ll = 0.0;
  for (std::size_t t = 0; t < e.size(); ++t) {
    if (t > 0) {
      const double z = e[t - 1] / std::sqrt(h);
      h = std::exp(omega + beta * std::log(h) + alpha * (std::fabs(z) - abs_mean) + gamma * z);
    }
    ll += normal_nll_term(h, e[t]);
  }
  return ll;
}

/// e is T x N as e[t][i]; W dense N x N. h1 empty: population variance of the implied innovations.
inline double st_loglik(double mu, double phi, double theta, const std::vector<double>& omega, double alpha,
                        double beta, const Dense& W, const Dense& e, std::vector<double> h1 = {}) {
  const std::size_t T = e.size(), N = W.size();
  Dense eps(T, std::vector<double>(N)), h(T, std::vector<double>(N));
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < N; ++i) {
      double v = e[t][i] - mu;
      if (t > 0)
        for (std::size_t j = 0; j < N; ++j) v -= W[i][j] * (phi * (e[t - 1][j] - mu) + theta * eps[t - 1][j]);
      eps[t][i] = v;
    }
  if (h1.empty()) {
    h1.assign(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      double m = 0.0;
      for (std::size_t t = 0; t < T; ++t) m += eps[t][i];
      m /= static_cast<double>(T);
      for (std::size_t t = 0; t < T; ++t) h1[i] += (eps[t][i] - m) * (eps[t][i] - m);
      h1[i] /= static_cast<double>(T);
    }
  }
  double ll = 0.0;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < N; ++i) {
      if (t == 0) {
        h[t][i] = h1[i];
      } else {
        double v = omega[i];
        for (std::size_t j = 0; j < N; ++j)
          v += W[i][j] * (alpha * eps[t - 1][j] * eps[t - 1][j] + beta * h[t - 1][j]);
        h[t][i] = v;
      }
      ll += normal_nll_term(h[t][i], eps[t][i]);
    }
  return ll;
}

/// ln|det(I - rho W)| from the eigenvalues of W.
inline double log_abs_det_eig(const Dense& W, double rho) {
  const auto N = static_cast<Eigen::Index>(W.size());
  Eigen::MatrixXd m(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j) m(i, j) = W[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  double s = 0.0;
  for (Eigen::Index k = 0; k < N; ++k) s += std::log(std::abs(std::complex<double>(1.0) - rho * es.eigenvalues()[k]));
  return s;
}

/// y is T x N as y[t][i]; c may be empty.
inline double sdpd_loglik(double rho, const std::vector<double>& gamma, double lambda, const std::vector<double>& c,
                          const Dense& W, const Dense& y, double sigma2) {
  const std::size_t T = y.size(), N = W.size();
  double ss = 0.0;
  for (std::size_t t = 1; t < T; ++t)
    for (std::size_t i = 0; i < N; ++i) {
      double v = y[t][i] - gamma[i] * y[t - 1][i] - (c.empty() ? 0.0 : c[i]);
      for (std::size_t j = 0; j < N; ++j) v -= W[i][j] * (rho * y[t][j] + lambda * y[t - 1][j]);
      ss += v * v;
    }
  const double m = static_cast<double>(T - 1);
  return m * log_abs_det_eig(W, rho) - 0.5 * m * static_cast<double>(N) * (kLn2Pi + std::log(sigma2)) -
         ss / (2.0 * sigma2);
}

/// Moran's I over all nodes, by the textbook double sum.
inline double moran_i(const std::vector<double>& x, const Dense& W) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double num = 0.0, s0 = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    den += (x[i] - mean) * (x[i] - mean);
    for (std::size_t j = 0; j < n; ++j) {
      num += W[i][j] * (x[i] - mean) * (x[j] - mean);
      s0 += W[i][j];
    }
  }
  return static_cast<double>(n) / s0 * num / den;
}

/// Exact mean and variance of I over every permutation of x (small n only).
/// This is the randomisation distribution the analytic moments describe.
inline std::pair<double, double> moran_permutation_moments(std::vector<double> x, const Dense& W) {
  std::sort(x.begin(), x.end());
  double s = 0.0, s2 = 0.0, count = 0.0;
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  do {
    std::vector<double> p(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) p[k] = x[idx[k]];
    const double v = moran_i(p, W);
    s += v;
    s2 += v * v;
    count += 1.0;
  } while (std::next_permutation(idx.begin(), idx.end()));
  const double mean = s / count;
  return {mean, s2 / count - mean * mean};
}

inline double ljung_box_q(const std::vector<double>& x, int lags) {
  const double T = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / T;
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  double q = 0.0;
  for (int k = 1; k <= lags; ++k) {
    double ck = 0.0;
    for (std::size_t t = static_cast<std::size_t>(k); t < x.size(); ++t)
      ck += (x[t] - mean) * (x[t - static_cast<std::size_t>(k)] - mean);
    q += (ck / c0) * (ck / c0) / (T - k);
  }
  return T * (T + 2.0) * q;
}

/// Row-standardised random dense weights with roughly `density` of off-diagonal links.
inline Dense random_weights(std::size_t n, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dense W(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && u(rng) < density) {
        W[i][j] = 0.1 + u(rng);
        s += W[i][j];
      }
    if (s == 0.0) {
      const std::size_t j = (i + 1) % n;
      W[i][j] = 1.0;
      s = 1.0;
    }
    for (double& v : W[i]) v /= s;
  }
  return W;
}

}  // namespace oracle
