#include "windvol/sdpd.hpp"

#include "windvol/parallel.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <random>

namespace windvol {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Spatial lag of every row of a T x N panel.
Matrix lag_rows(const WeightMatrix& w, const Matrix& y) {
  return (w.sparse() * y.transpose()).transpose();
}

void check_panel(const WeightMatrix& w, const Matrix& y) {
  if (y.cols() != w.n()) throw Error(Errc::ShapeMismatch, "panel columns do not match weight matrix");
  if (y.rows() < 2) throw Error(Errc::TooFewObservations, "SDPD needs at least two periods");
}

// Least-squares projection onto (1, x) or x alone, one station at a time.
struct StationProjector {
  bool intercept = true;
  Eigen::Matrix2d gram_inv = Eigen::Matrix2d::Zero();
  double xx_inv = 0.0;

  StationProjector(const Vector& x, bool with_intercept, const std::string& station) : intercept(with_intercept) {
    const double n = static_cast<double>(x.size());
    const double sx = x.sum();
    const double sxx = x.squaredNorm();
    if (intercept) {
      const double det = n * sxx - sx * sx;
      if (!(det > 1e-12 * n * std::max(sxx, 1e-300)))
        throw Error(Errc::SingularRegression, "lagged series has no variation", station);
      gram_inv << sxx, -sx, -sx, n;
      gram_inv /= det;
    } else {
      if (!(sxx > 0.0)) throw Error(Errc::SingularRegression, "lagged series is identically zero", station);
      xx_inv = 1.0 / sxx;
    }
  }

  // Coefficients (c, g) of v on (1, x); c = 0 without intercept.
  Eigen::Vector2d coef(const Vector& x, const Vector& v) const {
    if (!intercept) return {0.0, xx_inv * x.dot(v)};
    return gram_inv * Eigen::Vector2d(v.sum(), x.dot(v));
  }

  Vector residual(const Vector& x, const Vector& v) const {
    const auto b = coef(x, v);
    return (v.array() - b[0] - b[1] * x.array()).matrix();
  }
};

}  // namespace

double sdpd_log_det(const WeightMatrix& w, double rho) {
  const auto n = w.n();
  return log_det_positive(Matrix::Identity(n, n) - rho * w.dense());
}

Matrix sdpd_residuals(const SdpdParams& p, const WeightMatrix& w, const Matrix& y) {
  check_panel(w, y);
  const auto T = y.rows();
  const auto N = y.cols();
  if (p.gamma.size() != N) throw Error(Errc::ShapeMismatch, "gamma length");
  if (p.intercept.size() != 0 && p.intercept.size() != N) throw Error(Errc::ShapeMismatch, "intercept length");
  const Matrix wy = lag_rows(w, y);
  Matrix eps = y.bottomRows(T - 1) - p.rho * wy.bottomRows(T - 1) - p.lambda * wy.topRows(T - 1);
  eps -= (y.topRows(T - 1).array().rowwise() * p.gamma.transpose().array()).matrix();
  if (p.intercept.size() != 0) eps.rowwise() -= p.intercept.transpose();
  return eps;
}

double sdpd_loglik(const SdpdParams& p, const WeightMatrix& w, const Matrix& y, double sigma2) {
  if (!(std::abs(p.rho) < 1.0)) throw Error(Errc::InvalidArgument, "|rho| must be below 1");
  if (!(sigma2 > 0.0)) throw Error(Errc::InvalidArgument, "sigma2 must be positive");
  const Matrix eps = sdpd_residuals(p, w, y);
  const double m = static_cast<double>(eps.rows());
  const double cells = m * static_cast<double>(eps.cols());
  return m * sdpd_log_det(w, p.rho) - 0.5 * cells * (kLog2Pi + std::log(sigma2)) -
         eps.squaredNorm() / (2.0 * sigma2);
}

SdpdFit fit_sdpd(const Matrix& y, const WeightMatrix& w, const SdpdOptions& opts,
                 const std::vector<std::string>& station_ids) {
  check_panel(w, y);
  const auto T = y.rows();
  const auto N = y.cols();
  if (T < 50) throw Error(Errc::TooFewObservations, "SDPD needs at least 50 periods");
  if (!y.allFinite()) throw Error(Errc::NonFinite, "non-finite values in SDPD input");
  auto station = [&](Eigen::Index i) {
    return static_cast<std::size_t>(i) < station_ids.size() ? station_ids[static_cast<std::size_t>(i)]
                                                            : std::to_string(i + 1);
  };

  const Matrix wy = lag_rows(w, y);
  const Matrix cur = y.bottomRows(T - 1);
  const Matrix lag = y.topRows(T - 1);
  const Matrix wcur = wy.bottomRows(T - 1);
  const Matrix wlag = wy.topRows(T - 1);

  // Partial out (1, y_{t-1,i}) station by station. Everything that depends on
  // rho afterwards reduces to a handful of inner products.
  std::vector<StationProjector> proj;
  proj.reserve(static_cast<std::size_t>(N));
  double aa = 0, ab = 0, bb = 0, ca = 0, cb = 0, cc = 0;
  for (Eigen::Index i = 0; i < N; ++i) {
    proj.emplace_back(Vector(lag.col(i)), opts.intercept, station(i));
    const Vector x = lag.col(i);
    const Vector a = proj.back().residual(x, cur.col(i));
    const Vector b = proj.back().residual(x, wcur.col(i));
    const Vector c = proj.back().residual(x, wlag.col(i));
    aa += a.squaredNorm();
    ab += a.dot(b);
    bb += b.squaredNorm();
    ca += c.dot(a);
    cb += c.dot(b);
    cc += c.squaredNorm();
  }

  SdpdFit fit;
  const double cells = static_cast<double>((T - 1) * N);
  const double rows = static_cast<double>(T - 1);
  fit.lambda_identified = w.nonzeros() > 0 && cc > 1e-12 * std::max(aa, 1e-300);

  auto ssr = [&](double rho) {
    const double zz = aa - 2.0 * rho * ab + rho * rho * bb;
    if (!fit.lambda_identified) return zz;
    const double cz = ca - rho * cb;
    return zz - cz * cz / cc;
  };
  auto profile = [&](double rho) {
    double log_det;
    try {
      log_det = sdpd_log_det(w, rho);
    } catch (const Error&) {
      return kNegInf;
    }
    const double s = ssr(rho);
    if (!(s > 0.0)) return kNegInf;
    return rows * log_det - 0.5 * cells * std::log(s / cells);
  };

  double rho = 0.0;
  if (w.nonzeros() > 0) {
    const double step = opts.grid_step;
    const int points = static_cast<int>(std::floor(1.98 / step)) + 1;
    std::vector<double> grid(static_cast<std::size_t>(points));
    std::vector<double> value(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = -0.99 + step * static_cast<double>(k);
    parallel_for(grid.size(), opts.threads, [&](std::size_t k) { value[k] = profile(grid[k]); });
    std::size_t best = 0;
    for (std::size_t k = 1; k < grid.size(); ++k)
      if (value[k] > value[best]) best = k;
    if (!std::isfinite(value[best])) throw Error(Errc::NonConvergence, "SDPD profile likelihood not finite on the rho grid");

    double lo = std::max(-0.999, grid[best] - step);
    double hi = std::min(0.999, grid[best] + step);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = profile(x1), f2 = profile(x2);
    int iter = 0;
    while (hi - lo > opts.tolerance && iter++ < 200) {
      if (f1 >= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = profile(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = profile(x2);
      }
    }
    rho = 0.5 * (lo + hi);
    if (profile(rho) < value[best]) rho = grid[best];
  }

  auto& p = fit.params;
  p.rho = rho;
  p.lambda = fit.lambda_identified ? (ca - rho * cb) / cc : 0.0;
  p.gamma.resize(N);
  if (opts.intercept) p.intercept.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const Vector x = lag.col(i);
    const Vector v = cur.col(i) - rho * wcur.col(i) - p.lambda * wlag.col(i);
    const auto b = proj[static_cast<std::size_t>(i)].coef(x, v);
    p.gamma[i] = b[1];
    if (opts.intercept) p.intercept[i] = b[0];
  }
  fit.residuals = sdpd_residuals(p, w, y);
  fit.sigma2 = fit.residuals.squaredNorm() / cells;
  if (!(fit.sigma2 > 0.0)) throw Error(Errc::DegenerateInput, "SDPD residuals are identically zero");
  fit.loglik = sdpd_loglik(p, w, y, fit.sigma2);
  return fit;
}

Matrix sdpd_simulate(const SdpdParams& p, const WeightMatrix& w, Eigen::Index T, Eigen::Index burn_in,
                     double sigma, std::uint64_t seed) {
  const auto N = w.n();
  if (p.gamma.size() != N) throw Error(Errc::ShapeMismatch, "gamma length");
  sdpd_log_det(w, p.rho);
  Eigen::PartialPivLU<Matrix> lu(Matrix(Matrix::Identity(N, N) - p.rho * w.dense()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  Matrix out(T, N);
  Vector prev = Vector::Zero(N);
  Vector rhs(N);
  for (Eigen::Index t = -burn_in; t < T; ++t) {
    rhs = p.gamma.cwiseProduct(prev) + p.lambda * w.apply(prev);
    if (p.intercept.size() == N) rhs += p.intercept;
    for (Eigen::Index i = 0; i < N; ++i) rhs[i] += sigma * normal(rng);
    prev = lu.solve(rhs);
    if (t >= 0) out.row(t) = prev.transpose();
  }
  return out;
}

}  // namespace windvol
