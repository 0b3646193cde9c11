#include "oracles.hpp"

#include "windvol/sdpd.hpp"

#include <doctest.h>

#include <random>

using namespace windvol;

namespace {

oracle::Dense dense_of(const Matrix& m) {
  oracle::Dense d(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return d;
}

WeightMatrix random_w(std::size_t n, std::mt19937_64& rng, double density = 0.3) {
  const auto d = oracle::random_weights(n, density, rng);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d[i][j];
  return WeightMatrix::from_dense(m);
}

SdpdParams make(double rho, double gamma, double lambda, Eigen::Index n, double c = 0.0) {
  SdpdParams p;
  p.rho = rho;
  p.lambda = lambda;
  p.gamma = Vector::Constant(n, gamma);
  p.intercept = Vector::Constant(n, c);
  return p;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("log determinant agrees with the eigenvalue product") {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const auto w = random_w(5 + static_cast<std::size_t>(rng() % 40), rng);
    for (double rho : {-0.9, -0.3, 0.0, 0.5, 0.95})
      CHECK(sdpd_log_det(w, rho) == doctest::Approx(oracle::log_abs_det_eig(dense_of(w.dense()), rho)).epsilon(1e-10));
  }
}

TEST_CASE("log-likelihood matches the reference") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const auto n = 4 + static_cast<std::size_t>(rng() % 20);
    const auto w = random_w(n, rng);
    SdpdParams p = make(0.6 * z(rng) / 3.0, 0.0, 0.2 * z(rng) / 3.0, static_cast<Eigen::Index>(n));
    for (auto& g : p.gamma) g = 0.3 * z(rng);
    for (auto& c : p.intercept) c = z(rng);
    const Matrix y = sdpd_simulate(p, w, 60, 10, 1.0, rng());
    const double s2 = 0.7;
    CHECK(sdpd_loglik(p, w, y, s2) ==
          doctest::Approx(oracle::sdpd_loglik(p.rho, to_std(p.gamma), p.lambda, to_std(p.intercept), dense_of(w.dense()),
                                              dense_of(y), s2))
              .epsilon(1e-12));
    SdpdParams q = p;
    q.intercept.resize(0);
    CHECK(sdpd_loglik(q, w, y, s2) ==
          doctest::Approx(oracle::sdpd_loglik(q.rho, to_std(q.gamma), q.lambda, {}, dense_of(w.dense()), dense_of(y), s2))
              .epsilon(1e-12));
  }
}

TEST_CASE("residuals by hand") {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  const auto w = WeightMatrix::from_dense(m);
  Matrix y(2, 2);
  y << 1, 2, 3, 5;
  SdpdParams p = make(0.5, 0.2, 0.1, 2, 0.3);
  const Matrix r = sdpd_residuals(p, w, y);
  REQUIRE(r.rows() == 1);
  CHECK(r(0, 0) == doctest::Approx(3 - 0.5 * 5 - 0.1 * 2 - 0.2 * 1 - 0.3));
  CHECK(r(0, 1) == doctest::Approx(5 - 0.5 * 3 - 0.1 * 1 - 0.2 * 2 - 0.3));
}

TEST_CASE("without spatial links the fit reduces to station-wise AR(1) with intercept") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  const Eigen::Index T = 300, N = 4;
  Matrix y(T, N);
  for (Eigen::Index i = 0; i < N; ++i) {
    double x = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) y(t, i) = x = 0.5 + 0.4 * x + z(rng);
  }
  const auto fit = fit_sdpd(y, WeightMatrix::zero(N));
  CHECK(fit.params.rho == 0.0);
  CHECK_FALSE(fit.lambda_identified);
  for (Eigen::Index i = 0; i < N; ++i) {
    Matrix X(T - 1, 2);
    X.col(0).setOnes();
    X.col(1) = y.col(i).head(T - 1);
    const Vector b = (X.transpose() * X).ldlt().solve(X.transpose() * Vector(y.col(i).tail(T - 1)));
    CHECK(fit.params.intercept[i] == doctest::Approx(b[0]).epsilon(1e-10));
    CHECK(fit.params.gamma[i] == doctest::Approx(b[1]).epsilon(1e-10));
  }
}

TEST_CASE("fit recovers simulated parameters and maximises the concentrated likelihood") {
  std::mt19937_64 rng(4);
  const auto n = 25;
  const auto w = random_w(n, rng, 0.15);
  const auto truth = make(0.4, 0.3, 0.2, n, 0.5);
  const Matrix y = sdpd_simulate(truth, w, 800, 100, 1.0, 8);
  const auto fit = fit_sdpd(y, w);
  CHECK(fit.params.rho == doctest::Approx(0.4).epsilon(0.1));
  CHECK(fit.params.lambda == doctest::Approx(0.2).epsilon(0.25));
  CHECK(fit.params.gamma.mean() == doctest::Approx(0.3).epsilon(0.1));
  CHECK(fit.residuals.rows() == 799);
  CHECK(fit.sigma2 == doctest::Approx(fit.residuals.squaredNorm() / (799.0 * n)));
  // Concentrated likelihood at nearby parameter values is never higher.
  std::normal_distribution<double> z(0.0, 0.02);
  for (int rep = 0; rep < 20; ++rep) {
    SdpdParams q = fit.params;
    q.rho += z(rng);
    q.lambda += z(rng);
    for (auto& g : q.gamma) g += z(rng);
    const double s2 = sdpd_residuals(q, w, y).squaredNorm() / (799.0 * n);
    CHECK(sdpd_loglik(q, w, y, s2) <= fit.loglik + 1e-8);
  }
}

TEST_CASE("input validation") {
  std::mt19937_64 rng(5);
  const auto w = random_w(5, rng);
  CHECK_THROWS_AS(fit_sdpd(Matrix::Ones(20, 5), w), Error);
  CHECK_THROWS_AS(fit_sdpd(Matrix::Ones(100, 4), w), Error);
  CHECK_THROWS_AS(sdpd_loglik(make(1.0, 0, 0, 5), w, Matrix::Ones(10, 5), 1.0), Error);
  CHECK_THROWS_AS(sdpd_loglik(make(0.1, 0, 0, 5), w, Matrix::Ones(10, 5), 0.0), Error);
  Matrix y = sdpd_simulate(make(0.2, 0.2, 0.1, 5), w, 100, 10, 1.0, 1);
  y.col(2).setConstant(1.0);
  CHECK_THROWS_AS(fit_sdpd(y, w), Error);
}
