#include "oracles.hpp"

#include "windvol/diagnostics.hpp"
#include "windvol/unigarch.hpp"

#include <doctest.h>

#include <random>

using namespace windvol;

namespace {
std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }
}  // namespace

TEST_CASE("GARCH and EGARCH log-likelihoods match the reference recursions") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector e = simulate_garch({0.1, 0.1, 0.8}, 120 + rep, rng());
    const GarchParams g{0.05 + u(rng), 0.3 * u(rng), 0.6 * u(rng)};
    const double h0 = 0.1 + u(rng);
    CHECK(garch_loglik(g, as_span(e), h0) ==
          doctest::Approx(oracle::garch_loglik(g.omega, g.alpha, g.beta, to_std(e), h0)).epsilon(1e-13));
    const EgarchParams eg{-0.2 * u(rng), 0.3 * u(rng), 0.2 * (u(rng) - 0.5), 0.9 * u(rng)};
    CHECK(egarch_loglik(eg, as_span(e), h0) ==
          doctest::Approx(oracle::egarch_loglik(eg.omega, eg.alpha, eg.gamma, eg.beta, to_std(e), h0)).epsilon(1e-13));
  }
}

TEST_CASE("variance filters start at the supplied level") {
  const Vector e = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const Vector h = garch_filter({0.1, 0.2, 0.7}, as_span(e), 2.0);
  CHECK(h[0] == 2.0);
  CHECK(h[1] == doctest::Approx(0.1 + 0.2 * 1.0 + 0.7 * 2.0));
  CHECK(h[2] == doctest::Approx(0.1 + 0.2 * 4.0 + 0.7 * h[1]));
  const Vector he = egarch_filter({0.0, 0.0, 0.0, 0.5}, as_span(e), 4.0);
  CHECK(he[1] == doctest::Approx(2.0));  // exp(0.5 ln 4)
}

TEST_CASE("initial variance options") {
  const Vector e = (Vector(4) << 1, 2, 3, 4).finished();
  CHECK(garch_initial_variance({0.1, 0.1, 0.8}, as_span(e), VarianceInit::sample_variance) == doctest::Approx(1.25));
  CHECK(garch_initial_variance({0.1, 0.1, 0.8}, as_span(e), VarianceInit::unconditional) == doctest::Approx(1.0));
  CHECK_THROWS_AS(garch_initial_variance({0.1, 0.5, 0.5}, as_span(e), VarianceInit::unconditional), Error);
  CHECK(egarch_initial_variance({0.2, 0.1, 0.0, 0.8}, as_span(e), VarianceInit::unconditional) ==
        doctest::Approx(std::exp(1.0)));
}

TEST_CASE("one-step forecasts by hand") {
  UniFit g;
  g.model = UniModel::garch;
  g.params = (Vector(3) << 0.1, 0.2, 0.7).finished();
  CHECK(uni_forecast(g, 2.0, 1.5) == doctest::Approx(0.1 + 0.8 + 1.05));
  UniFit eg;
  eg.model = UniModel::egarch;
  eg.params = (Vector(4) << -0.1, 0.2, -0.05, 0.9).finished();
  const double z = 1.0 / std::sqrt(4.0);
  CHECK(uni_forecast(eg, 1.0, 4.0) ==
        doctest::Approx(std::exp(-0.1 + 0.9 * std::log(4.0) + 0.2 * (z - std::sqrt(2.0 / kPi)) - 0.05 * z)));
}

TEST_CASE("fits recover simulated parameters and report consistent criteria") {
  const Vector e = simulate_garch({0.1, 0.1, 0.8}, 5000, 3);
  const auto f = fit_garch(as_span(e));
  CHECK(f.converged);
  CHECK(f.params[1] == doctest::Approx(0.1).epsilon(0.5));
  CHECK(f.params[2] == doctest::Approx(0.8).epsilon(0.1));
  CHECK(f.params[1] + f.params[2] < kGarchSumCap + 1e-12);
  CHECK(f.loglik == doctest::Approx(garch_loglik(f.garch(), as_span(e), f.h0)));
  CHECK(f.aic == doctest::Approx(-2.0 * f.loglik + 6.0));
  CHECK(f.bic == doctest::Approx(-2.0 * f.loglik + 3.0 * std::log(5000.0)));
  CHECK(f.std_errors.size() == 3);
  CHECK((uni_filter(f, as_span(e)) - f.h).cwiseAbs().maxCoeff() < 1e-12);

  const Vector x = simulate_egarch({-0.1, 0.15, -0.05, 0.9}, 5000, 4);
  const auto fe = fit_egarch(as_span(x));
  CHECK(fe.params[3] == doctest::Approx(0.9).epsilon(0.05));
  CHECK(fe.param_names().size() == 4);
}

TEST_CASE("fit input validation") {
  CHECK_THROWS_AS(fit_garch(as_span(Vector::Ones(50))), Error);
  CHECK_THROWS_AS(fit_garch(as_span(Vector::Zero(200))), Error);
  Vector bad = simulate_garch({0.1, 0.1, 0.8}, 200, 1);
  bad[10] = std::nan("");
  CHECK_THROWS_AS(fit_egarch(as_span(bad)), Error);
  CHECK_THROWS_AS(validate(GarchParams{0.0, 0.1, 0.8}), Error);
  CHECK_THROWS_AS(validate(EgarchParams{0.0, 0.1, 0.0, 1.0}), Error);
}

TEST_CASE("model preference counts strict AIC and BIC wins") {
  auto fit = [](double aic, double bic) {
    UniFit f;
    f.aic = aic;
    f.bic = bic;
    return f;
  };
  const std::vector<UniFit> g{fit(10, 10), fit(10, 20), fit(5, 5), fit(7, 7)};
  const std::vector<UniFit> e{fit(9, 11), fit(10, 19), fit(6, 6), fit(6, 8)};
  CHECK(model_preference(g, e, Criterion::aic) == doctest::Approx(50.0));  // ties go to GARCH
  CHECK(model_preference(g, e, Criterion::bic) == doctest::Approx(25.0));
  CHECK_THROWS_AS(model_preference(g, {}, Criterion::aic), Error);
  CHECK_THROWS_AS(model_preference({}, {}, Criterion::aic), Error);
}
