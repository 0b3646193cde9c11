#pragma once

#include "windvol/core.hpp"

#include <functional>
#include <string>

namespace windvol::optim {

using Objective = std::function<double(const Vector&)>;

struct Options {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;  // infinity norm
  double value_tolerance = 1e-12;    // relative change, checked over 3 iterations
  double fd_step = 1e-6;             // relative central-difference step
};

struct Result {
  Vector x;
  double value = 0.0;
  Vector gradient;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Unconstrained BFGS with backtracking line search and central-difference
/// gradients. Non-finite objective values are treated as infeasible and
/// make the line search back off.
Result minimize_bfgs(const Objective& f, Vector x0, const Options& opts = {});

Vector numerical_gradient(const Objective& f, const Vector& x, double rel_step = 1e-6);

/// Central-difference Hessian with steps rel_step * max(1, |x_i|).
Matrix numerical_hessian(const Objective& f, const Vector& x, double rel_step = 1e-4);

/// Standard errors from the inverse of a negative log-likelihood Hessian.
/// Entries whose variance is not positive come back as NaN; directions with
/// no curvature at all get +inf.
Vector standard_errors(const Matrix& neg_loglik_hessian);

}  // namespace windvol::optim
