#include "oracles.hpp"

#include "windvol/stgarch.hpp"

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

WeightMatrix random_w(std::size_t n, std::mt19937_64& rng) {
  const auto d = oracle::random_weights(n, 0.3, rng);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d[i][j];
  return WeightMatrix::from_dense(m);
}

StarmaGarchParams params(double mu, double phi, double theta, double omega, double alpha, double beta) {
  StarmaGarchParams p;
  p.mu = mu;
  p.phi = phi;
  p.theta = theta;
  p.omega = omega;
  p.alpha = alpha;
  p.beta = beta;
  return p;
}

}  // namespace

TEST_CASE("log-likelihood matches the reference recursion") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const auto n = 3 + static_cast<std::size_t>(rng() % 20);
    const auto w = random_w(n, rng);
    const auto p = params(0.1 * (u(rng) - 0.5), 0.8 * (u(rng) - 0.5), 0.8 * (u(rng) - 0.5), 0.05 + 0.3 * u(rng),
                          0.3 * u(rng), 0.6 * u(rng));
    const auto sim = st_simulate(p, w, 80, 20, rng());
    const auto W = dense_of(w.dense());
    const auto E = dense_of(sim.e);
    CHECK(st_loglik(p, w, sim.e) ==
          doctest::Approx(oracle::st_loglik(p.mu, p.phi, p.theta, std::vector<double>(n, p.omega), p.alpha, p.beta, W, E))
              .epsilon(1e-12));
    // Station intercepts and supplied start values.
    auto q = p;
    q.omega_station = Vector::NullaryExpr(static_cast<Eigen::Index>(n), [&] { return 0.05 + u(rng); });
    const Vector h1 = Vector::NullaryExpr(static_cast<Eigen::Index>(n), [&] { return 0.2 + u(rng); });
    CHECK(st_loglik(q, w, sim.e, h1) ==
          doctest::Approx(oracle::st_loglik(q.mu, q.phi, q.theta, {q.omega_station.data(), q.omega_station.data() + n},
                                            q.alpha, q.beta, W, E, {h1.data(), h1.data() + n}))
              .epsilon(1e-12));
  }
}

TEST_CASE("filter inverts the simulator without burn-in") {
  std::mt19937_64 rng(4);
  const auto w = random_w(8, rng);
  const auto p = params(0.2, -0.4, 0.5, 0.1, 0.2, 0.5);
  const auto sim = st_simulate(p, w, 100, 0, 9);
  const Vector h1 = sim.h.row(0).transpose();
  const auto f = st_filter(p, w, sim.e, h1);
  CHECK((f.eps - sim.eps).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((f.h - sim.h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("variance step and forecast") {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  const auto w = WeightMatrix::from_dense(m);
  const auto p = params(0, 0, 0, 0.1, 0.2, 0.5);
  const Vector eps = (Vector(2) << 1.0, 2.0).finished();
  const Vector h = (Vector(2) << 3.0, 4.0).finished();
  const Vector next = st_variance_step(p, w, eps, h);
  CHECK(next[0] == doctest::Approx(0.1 + 0.2 * 4.0 + 0.5 * 4.0));
  CHECK(next[1] == doctest::Approx(0.1 + 0.2 * 1.0 + 0.5 * 3.0));
  CHECK_THROWS_AS(st_variance_step(p, w, Vector::Ones(3), h), Error);

  StFit fit;
  fit.params = p;
  Matrix e(3, 2);
  e << 0.5, -0.5, 1.0, 2.0, -1.0, 0.3;
  const auto path = st_forecast_path(fit, e, w);
  const Vector fc = st_forecast(fit, e, w);
  CHECK((fc - st_variance_step(p, w, path.eps.row(2).transpose(), path.h.row(2).transpose())).norm() == 0.0);
}

TEST_CASE("parameter validation") {
  std::mt19937_64 rng(1);
  const auto w = random_w(4, rng);
  const Matrix e = Matrix::Ones(10, 4);
  CHECK_THROWS_AS(st_loglik(params(0, 0, 0, 0.1, 0.6, 0.5), w, e), Error);
  CHECK_THROWS_AS(st_loglik(params(0, 1.0, 0, 0.1, 0.1, 0.5), w, e), Error);
  CHECK_THROWS_AS(st_loglik(params(0, 0, 0, 0.0, 0.1, 0.5), w, e), Error);
  CHECK_THROWS_AS(st_loglik(params(0, 0, 0, 0.1, 0.1, 0.5), w, Matrix::Ones(10, 3)), Error);
}

TEST_CASE("fit reports a local maximum with consistent bookkeeping") {
  std::mt19937_64 rng(2);
  const auto w = random_w(10, rng);
  const auto truth = params(0.0, 0.3, 0.2, 0.2, 0.15, 0.6);
  const auto sim = st_simulate(truth, w, 600, 200, 5);
  StOptions o;
  o.starts = 2;
  const auto fit = fit_st(sim.e, w, o);
  CHECK(fit.names.size() == 6);
  CHECK(fit.loglik == doctest::Approx(st_loglik(fit.params, w, sim.e, fit.h1)));
  CHECK(fit.loglik >= st_loglik(truth, w, sim.e, fit.h1) - 1e-6);
  CHECK(fit.aic == doctest::Approx(-2.0 * fit.loglik + 12.0));
  CHECK(fit.bic == doctest::Approx(-2.0 * fit.loglik + 6.0 * std::log(6000.0)));
  CHECK(fit.start_logliks.size() == 2);
  for (std::size_t j = 0; j < fit.boundary.size(); ++j) {
    if (fit.boundary[j]) {
      CHECK(fit.p_values[static_cast<Eigen::Index>(j)] == 0.5);
      CHECK(std::isnan(fit.std_errors[static_cast<Eigen::Index>(j)]));
    } else {
      CHECK(fit.std_errors[static_cast<Eigen::Index>(j)] > 0.0);
    }
  }
}

TEST_CASE("homoskedastic data put alpha on the boundary") {
  std::mt19937_64 rng(3);
  const auto w = random_w(12, rng);
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix e(500, 12);
  for (auto& v : e.reshaped()) v = z(rng);
  const auto fit = fit_st(e, w);
  const bool alpha_at_zero = fit.params.alpha < 1e-4;
  CHECK(fit.boundary[4] == alpha_at_zero);
  CHECK(fit.params.alpha < 0.05);
}

TEST_CASE("station intercepts add one parameter per station") {
  std::mt19937_64 rng(6);
  const auto w = random_w(5, rng);
  const auto sim = st_simulate(params(0, 0.2, 0.1, 0.2, 0.1, 0.5), w, 300, 100, 7);
  StOptions o;
  o.station_omega = true;
  o.starts = 1;
  const auto fit = fit_st(sim.e, w, o);
  CHECK(fit.estimates.size() == 10);
  CHECK(fit.names.back() == "omega_5");
  CHECK(fit.params.omega_station.size() == 5);
  CHECK((fit.params.omega_station.array() > 0.0).all());
}
