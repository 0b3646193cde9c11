#include "windvol/mvlogarch.hpp"

#include "windvol/optim.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace windvol {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix lag_rows(const WeightMatrix& w, const Matrix& y) {
  return (w.sparse() * y.transpose()).transpose();
}

Matrix system_matrix(const WeightMatrix& w, const Eigen::Matrix2d& psi) {
  const auto n = w.n();
  const Matrix wd = w.dense();
  Matrix a = Matrix::Identity(2 * n, 2 * n);
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) a.block(k * n, l * n, n, n) -= psi(l, k) * wd;
  return a;
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvec(const Vector& v, Eigen::Index rows) {
  return Eigen::Map<const Matrix>(v.data(), rows, v.size() / rows);
}

void check_pair(const HeightPair& y, const WeightMatrix& w) {
  if (y[0].rows() != y[1].rows() || y[0].cols() != y[1].cols())
    throw Error(Errc::ShapeMismatch, "the two heights have different shapes");
  if (y[0].cols() != w.n()) throw Error(Errc::ShapeMismatch, "panel columns do not match weight matrix");
}

// Simultaneous solver with a factorisation reused across time steps.
class Solver {
 public:
  Solver(const WeightMatrix& w, const MvSystem& p) : n_(w.n()), lu_(system_matrix(w, p.psi)) {
    log_det_positive(system_matrix(w, p.psi));
  }
  Matrix solve(const Matrix& rhs) const { return unvec(lu_.solve(vec(rhs)), n_); }

 private:
  Eigen::Index n_;
  Eigen::PartialPivLU<Matrix> lu_;
};

Matrix intercept_rows(const MvSystem& p, Eigen::Index n) {
  Matrix c(n, 2);
  c.col(0).setConstant(p.intercept[0]);
  c.col(1).setConstant(p.intercept[1]);
  return c;
}

Matrix stack(const Vector& a, const Vector& b) {
  Matrix m(a.size(), 2);
  m.col(0) = a;
  m.col(1) = b;
  return m;
}

}  // namespace

double mv_log_det(const WeightMatrix& w, const Eigen::Matrix2d& psi) {
  return log_det_positive(system_matrix(w, psi));
}

double mv_spectral_radius(const WeightMatrix& w, const Eigen::Matrix2d& psi) {
  const auto n = w.n();
  if (n == 0) return 0.0;
  // deterministic start with no special structure
  Matrix y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = 1.0 + 0.37 * std::sin(1.0 + static_cast<double>(i));
    y(i, 1) = 1.0 + 0.29 * std::cos(2.0 + static_cast<double>(i));
  }
  y /= y.norm();
  // growth rate averaged over a window copes with complex dominant pairs
  constexpr int kWarm = 300, kAvg = 300;
  double log_growth = 0.0;
  for (int it = 0; it < kWarm + kAvg; ++it) {
    y = (w.sparse() * y) * psi;
    const double norm = y.norm();
    if (!(norm > 1e-300)) return 0.0;
    y /= norm;
    if (it >= kWarm) log_growth += std::log(norm);
  }
  return std::exp(log_growth / kAvg);
}

Matrix mv_solve(const WeightMatrix& w, const MvSystem& p, const Matrix& rhs_without_spatial) {
  if (rhs_without_spatial.rows() != w.n() || rhs_without_spatial.cols() != 2)
    throw Error(Errc::ShapeMismatch, "right-hand side must be N x 2");
  return Solver(w, p).solve(intercept_rows(p, w.n()) + rhs_without_spatial);
}

LogSquared log_sq_transform(const HeightPair& eps) {
  if (eps[0].rows() != eps[1].rows() || eps[0].cols() != eps[1].cols())
    throw Error(Errc::ShapeMismatch, "the two heights have different shapes");
  std::vector<double> sq;
  sq.reserve(static_cast<std::size_t>(2 * eps[0].size()));
  for (const auto& m : eps)
    for (Eigen::Index k = 0; k < m.size(); ++k) sq.push_back(m.data()[k] * m.data()[k]);
  if (sq.empty() || std::all_of(sq.begin(), sq.end(), [](double v) { return v == 0.0; }))
    throw Error(Errc::AllZeroResiduals, "all residuals are zero");

  auto median_of = [](std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
  };
  double med = median_of(sq);
  if (!(med > 0.0)) {
    std::vector<double> pos;
    for (double v : sq)
      if (v > 0.0) pos.push_back(v);
    med = median_of(pos);
  }

  LogSquared out;
  out.floor = 1e-10 * med;
  for (int k = 0; k < 2; ++k) {
    out.values[k].resize(eps[k].rows(), eps[k].cols());
    for (Eigen::Index j = 0; j < eps[k].size(); ++j) {
      const double v = eps[k].data()[j] * eps[k].data()[j];
      if (v < out.floor) ++out.floored;
      out.values[k].data()[j] = std::log(std::max(v, out.floor));
    }
  }
  return out;
}

MvFit fit_mv_system(const HeightPair& y, const WeightMatrix& w, const MvOptions& opts) {
  check_pair(y, w);
  const auto T = y[0].rows();
  const auto N = y[0].cols();
  if (T < 50) throw Error(Errc::TooFewObservations, "the bivariate system needs at least 50 periods");
  if (!y[0].allFinite() || !y[1].allFinite()) throw Error(Errc::NonFinite, "non-finite input");
  const Eigen::Index n = (T - 1) * N;
  const double nd = static_cast<double>(n);
  const double rows = static_cast<double>(T - 1);

  std::array<Vector, 2> cur, lag, src;
  for (int k = 0; k < 2; ++k) {
    cur[k] = vec(y[k].bottomRows(T - 1));
    lag[k] = vec(y[k].topRows(T - 1));
    const Matrix wy = lag_rows(w, y[k]);
    src[k] = vec(opts.lagged_spatial ? Matrix(wy.topRows(T - 1)) : Matrix(wy.bottomRows(T - 1)));
  }
  Matrix X(n, 3);
  X.col(0).setOnes();
  X.col(1) = lag[0];
  X.col(2) = lag[1];
  const Eigen::Matrix3d xtx = X.transpose() * X;
  Eigen::FullPivLU<Eigen::Matrix3d> xlu(xtx);
  if (!xlu.isInvertible() || xlu.rcond() < 1e-12)
    throw Error(Errc::SingularRegression, "lagged regressors are collinear");
  const Eigen::Matrix3d xtx_inv = xlu.inverse();
  auto resid = [&](const Vector& v) -> Vector { return v - X * (xtx_inv * (X.transpose() * v)); };

  Matrix R(n, 4);
  R.col(0) = resid(cur[0]);
  R.col(1) = resid(cur[1]);
  R.col(2) = resid(src[0]);
  R.col(3) = resid(src[1]);
  const Eigen::Matrix4d G = R.transpose() * R;

  auto ssr = [&](const Eigen::Matrix2d& psi, int k) {
    const double a = psi(0, k), b = psi(1, k);
    return G(k, k) - 2.0 * a * G(k, 2) - 2.0 * b * G(k, 3) + a * a * G(2, 2) + 2.0 * a * b * G(2, 3) +
           b * b * G(3, 3);
  };
  auto psi_of = [](const Vector& x) {
    Eigen::Matrix2d p;
    p << x[0], x[1], x[2], x[3];
    return p;
  };
  auto neg_profile = [&](const Vector& x) {
    const Eigen::Matrix2d psi = psi_of(x);
    double log_det = 0.0;
    if (!opts.lagged_spatial) {
      try {
        log_det = mv_log_det(w, psi);
      } catch (const Error&) {
        return kInf;
      }
    }
    const double s0 = ssr(psi, 0), s1 = ssr(psi, 1);
    if (!(s0 > 0.0) || !(s1 > 0.0)) return kInf;
    return -(rows * log_det - 0.5 * nd * (std::log(s0 / nd) + std::log(s1 / nd)));
  };

  // least-squares values ignoring the Jacobian; exact for the lagged form
  const Eigen::Matrix2d gb = G.block<2, 2>(2, 2);
  Eigen::FullPivLU<Eigen::Matrix2d> glu(gb);
  if (!glu.isInvertible()) throw Error(Errc::SingularRegression, "spatial regressors are degenerate");
  Eigen::Matrix2d psi_ols;
  for (int k = 0; k < 2; ++k) psi_ols.col(k) = glu.solve(Eigen::Vector2d(G(k, 2), G(k, 3)));
  Vector x0(4);
  x0 << psi_ols(0, 0), psi_ols(0, 1), psi_ols(1, 0), psi_ols(1, 1);

  MvFit fit;
  fit.lagged_spatial = opts.lagged_spatial;
  Vector xhat = x0;
  if (opts.lagged_spatial) {
    fit.converged = true;
  } else {
    if (!std::isfinite(neg_profile(x0))) x0.setZero();
    optim::Options oo;
    oo.max_iterations = opts.max_iterations;
    auto scaled = [&](const Vector& x) { return neg_profile(x) / nd; };
    const auto res = optim::minimize_bfgs(scaled, x0, oo);
    if (!std::isfinite(res.value)) throw Error(Errc::NonConvergence, "bivariate system: " + res.message);
    xhat = res.x;
    fit.converged = res.converged;
  }
  auto& p = fit.params;
  p.psi = psi_of(xhat);

  const Vector se_psi = optim::standard_errors(optim::numerical_hessian(neg_profile, xhat, 1e-5));
  fit.psi_se = psi_of(se_psi);

  double log_det = opts.lagged_spatial ? 0.0 : mv_log_det(w, p.psi);
  for (int k = 0; k < 2; ++k) {
    const Vector v = cur[k] - p.psi(0, k) * src[0] - p.psi(1, k) * src[1];
    const Eigen::Vector3d b = xtx_inv * (X.transpose() * v);
    const Vector u = v - X * b;
    fit.sigma2[k] = u.squaredNorm() / nd;
    if (!(fit.sigma2[k] > 0.0)) throw Error(Errc::DegenerateInput, "residuals are identically zero");
    p.intercept[k] = b[0];
    p.pi(0, k) = b[1];
    p.pi(1, k) = b[2];
    fit.intercept_se[k] = std::sqrt(fit.sigma2[k] * xtx_inv(0, 0));
    fit.pi_se(0, k) = std::sqrt(fit.sigma2[k] * xtx_inv(1, 1));
    fit.pi_se(1, k) = std::sqrt(fit.sigma2[k] * xtx_inv(2, 2));
    fit.residuals[k] = unvec(u, T - 1);
  }
  fit.loglik = rows * log_det - 0.5 * nd * (2.0 * (kLog2Pi + 1.0) + std::log(fit.sigma2[0]) + std::log(fit.sigma2[1]));
  fit.spectral_radius = mv_spectral_radius(w, p.psi);
  return fit;
}

MvFit fit_mv_mean(const HeightPair& y, const WeightMatrix& w, int max_iterations) {
  MvOptions o;
  o.max_iterations = max_iterations;
  return fit_mv_system(y, w, o);
}

HeightPair mv_residuals(const MvSystem& p, const WeightMatrix& w, const HeightPair& y, bool lagged_spatial) {
  check_pair(y, w);
  const auto T = y[0].rows();
  if (T < 2) throw Error(Errc::TooFewObservations, "need at least two periods");
  std::array<Matrix, 2> wy{lag_rows(w, y[0]), lag_rows(w, y[1])};
  HeightPair out;
  for (int k = 0; k < 2; ++k) {
    out[k] = y[k].bottomRows(T - 1);
    out[k].array() -= p.intercept[k];
    for (int j = 0; j < 2; ++j) {
      out[k] -= p.pi(j, k) * y[j].topRows(T - 1);
      out[k] -= p.psi(j, k) * (lagged_spatial ? wy[j].topRows(T - 1) : wy[j].bottomRows(T - 1));
    }
  }
  return out;
}

MvVolFit fit_mv_logarch(const HeightPair& eps, const WeightMatrix& w, const MvOptions& opts) {
  MvVolFit out;
  out.log_sq = log_sq_transform(eps);
  out.system = fit_mv_system(out.log_sq.values, w, opts);
  const HeightPair h = mv_forecast_path(out.system.params, w, out.log_sq.values, opts.lagged_spatial);
  for (int k = 0; k < 2; ++k) out.log_h[k] = h[k].array().log().matrix();
  return out;
}

Matrix mv_forecast(const MvSystem& vol, const WeightMatrix& w, const Vector& log_sq_last_h10,
                   const Vector& log_sq_last_h100, bool lagged_spatial) {
  const auto N = w.n();
  if (log_sq_last_h10.size() != N || log_sq_last_h100.size() != N)
    throw Error(Errc::ShapeMismatch, "history rows do not match the weight matrix");
  const Matrix last = stack(log_sq_last_h10, log_sq_last_h100);
  Matrix rhs = last * vol.pi;
  Matrix log_h;
  if (lagged_spatial) {
    log_h = intercept_rows(vol, N) + rhs + (w.sparse() * last) * vol.psi;
  } else {
    log_h = mv_solve(w, vol, rhs);
  }
  return log_h.array().exp().matrix();
}

HeightPair mv_forecast_path(const MvSystem& vol, const WeightMatrix& w, const HeightPair& log_sq,
                            bool lagged_spatial) {
  check_pair(log_sq, w);
  const auto T = log_sq[0].rows();
  const auto N = w.n();
  HeightPair out{Matrix(std::max<Eigen::Index>(T - 1, 0), N), Matrix(std::max<Eigen::Index>(T - 1, 0), N)};
  if (T < 2) return out;
  const Matrix c = intercept_rows(vol, N);
  std::optional<Solver> solver;
  if (!lagged_spatial) solver.emplace(w, vol);
  for (Eigen::Index t = 1; t < T; ++t) {
    const Matrix last = stack(log_sq[0].row(t - 1).transpose(), log_sq[1].row(t - 1).transpose());
    Matrix log_h = lagged_spatial ? Matrix(c + last * vol.pi + (w.sparse() * last) * vol.psi)
                                  : solver->solve(c + last * vol.pi);
    for (int k = 0; k < 2; ++k) out[k].row(t - 1) = log_h.col(k).array().exp().matrix().transpose();
  }
  return out;
}

Matrix mv_mean_forecast(const MvSystem& mean, const WeightMatrix& w, const Vector& last_h10,
                        const Vector& last_h100) {
  if (last_h10.size() != w.n() || last_h100.size() != w.n())
    throw Error(Errc::ShapeMismatch, "history rows do not match the weight matrix");
  return mv_solve(w, mean, stack(last_h10, last_h100) * mean.pi);
}

HeightPair mv_simulate_mean(const MvSystem& p, const WeightMatrix& w, Eigen::Index T, Eigen::Index burn_in,
                            const Eigen::Vector2d& sigma, std::uint64_t seed) {
  const auto N = w.n();
  const Solver solver(w, p);
  const Matrix c = intercept_rows(p, N);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  HeightPair out{Matrix(T, N), Matrix(T, N)};
  Matrix prev = Matrix::Zero(N, 2);
  Matrix shock(N, 2);
  for (Eigen::Index t = -burn_in; t < T; ++t) {
    for (int k = 0; k < 2; ++k)
      for (Eigen::Index i = 0; i < N; ++i) shock(i, k) = sigma[k] * normal(rng);
    prev = solver.solve(c + prev * p.pi + shock);
    if (t >= 0)
      for (int k = 0; k < 2; ++k) out[k].row(t) = prev.col(k).transpose();
  }
  return out;
}

HeightPair mv_simulate_logarch(const MvSystem& p, const WeightMatrix& w, Eigen::Index T, Eigen::Index burn_in,
                               std::uint64_t seed, bool lagged_spatial) {
  const auto N = w.n();
  std::optional<Solver> solver;
  if (!lagged_spatial) solver.emplace(w, p);
  const Matrix c = intercept_rows(p, N);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  HeightPair out{Matrix(T, N), Matrix(T, N)};
  Matrix prev = Matrix::Zero(N, 2);
  Matrix z(N, 2), u(N, 2);
  for (Eigen::Index t = -burn_in; t < T; ++t) {
    for (int k = 0; k < 2; ++k)
      for (Eigen::Index i = 0; i < N; ++i) {
        z(i, k) = normal(rng);
        u(i, k) = std::log(z(i, k) * z(i, k)) - kLogChiSqMean;
      }
    Matrix cur = lagged_spatial ? Matrix(c + prev * p.pi + (w.sparse() * prev) * p.psi + u)
                                : solver->solve(c + prev * p.pi + u);
    if (t >= 0)
      for (int k = 0; k < 2; ++k)
        for (Eigen::Index i = 0; i < N; ++i)
          out[k](t, i) = std::copysign(std::exp(0.5 * cur(i, k)), z(i, k));
    prev = std::move(cur);
  }
  return out;
}

}  // namespace windvol
