#include "windvol/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace windvol::optim {
namespace {

double safe_eval(const Objective& f, const Vector& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

Vector numerical_gradient(const Objective& f, const Vector& x, double rel_step) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + h;
    const double fp = safe_eval(f, xp);
    xp[i] = x[i] - h;
    const double fm = safe_eval(f, xp);
    xp[i] = x[i];
    if (std::isfinite(fp) && std::isfinite(fm)) {
      g[i] = (fp - fm) / (2.0 * h);
    } else {
      // one-sided fallback next to an infeasible region
      const double f0 = safe_eval(f, x);
      g[i] = std::isfinite(fp) ? (fp - f0) / h : (f0 - fm) / h;
      if (!std::isfinite(g[i])) g[i] = 0.0;
    }
  }
  return g;
}

Matrix numerical_hessian(const Objective& f, const Vector& x, double rel_step) {
  const auto n = x.size();
  Vector h(n);
  for (Eigen::Index i = 0; i < n; ++i) h[i] = rel_step * std::max(1.0, std::abs(x[i]));
  const double f0 = f(x);
  Matrix H(n, n);
  Vector xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    xp[i] = x[i] + h[i];
    const double fp = f(xp);
    xp[i] = x[i] - h[i];
    const double fm = f(xp);
    xp[i] = x[i];
    H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      xp[i] = x[i] + h[i];
      xp[j] = x[j] + h[j];
      const double fpp = f(xp);
      xp[j] = x[j] - h[j];
      const double fpm = f(xp);
      xp[i] = x[i] - h[i];
      const double fmm = f(xp);
      xp[j] = x[j] + h[j];
      const double fmp = f(xp);
      xp[i] = x[i];
      xp[j] = x[j];
      H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
    }
  }
  return H;
}

Vector standard_errors(const Matrix& hessian) {
  const auto n = hessian.rows();
  Vector se = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
  if (!hessian.allFinite()) return se;
  // directions with no curvature are unidentified: infinite standard error
  const double scale = hessian.diagonal().cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(hessian(i, i)) <= 1e-10 * scale)
      se[i] = std::numeric_limits<double>::infinity();
    else
      keep.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(keep.size());
  Matrix sub(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = hessian(keep[a], keep[b]);
  Eigen::FullPivLU<Matrix> lu(sub);
  if (!lu.isInvertible()) return se;
  const Matrix cov = lu.inverse();
  for (Eigen::Index a = 0; a < m; ++a)
    if (cov(a, a) > 0.0) se[keep[a]] = std::sqrt(cov(a, a));
  return se;
}

Result minimize_bfgs(const Objective& f, Vector x, const Options& opts) {
  const auto n = x.size();
  Result res;
  double fx = safe_eval(f, x);
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    res.message = "objective not finite at the starting point";
    return res;
  }
  Vector g = numerical_gradient(f, x, opts.fd_step);
  Matrix Hinv = Matrix::Identity(n, n);
  bool fresh = true;
  int small_steps = 0;

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tolerance) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      break;
    }
    Vector p = -Hinv * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      Hinv.setIdentity();
      fresh = true;
      p = -g;
      slope = -g.squaredNorm();
    }
    // keep the first trial step of a fresh metric modest
    double t = 1.0;
    if (fresh) t = std::min(1.0, 1.0 / std::max(1e-12, p.lpNorm<Eigen::Infinity>()));

    Vector xn;
    double fn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + t * p;
      fn = safe_eval(f, xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      // quadratic interpolation of the step when the trial value is usable
      double tn = 0.5 * t;
      if (std::isfinite(fn)) {
        const double denom = 2.0 * (fn - fx - slope * t);
        if (denom > 0.0) tn = std::clamp(-slope * t * t / denom, 0.1 * t, 0.5 * t);
      }
      t = tn;
    }
    if (!accepted) {
      if (!fresh) {
        Hinv.setIdentity();
        fresh = true;
        continue;
      }
      res.message = "line search failed";
      // a stalled search at a tiny gradient is as good as it gets
      res.converged = g.lpNorm<Eigen::Infinity>() < 1e3 * opts.gradient_tolerance;
      break;
    }

    const Vector gn = numerical_gradient(f, xn, opts.fd_step);
    const Vector s = xn - x;
    const Vector y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) Hinv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Matrix I = Matrix::Identity(n, n);
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) +
             rho * s * s.transpose();
      fresh = false;
    }

    const double change = std::abs(fx - fn) / (1.0 + std::abs(fx));
    x = xn;
    fx = fn;
    g = gn;
    small_steps = change < opts.value_tolerance ? small_steps + 1 : 0;
    if (small_steps >= 3) {
      res.converged = true;
      res.message = "relative value change below tolerance";
      ++iter;
      break;
    }
  }
  if (iter >= opts.max_iterations && res.message.empty()) res.message = "iteration limit reached";
  res.x = x;
  res.value = fx;
  res.gradient = g;
  res.iterations = iter;
  return res;
}

}  // namespace windvol::optim
