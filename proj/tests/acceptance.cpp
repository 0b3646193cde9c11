// Acceptance checks. Prints one line per criterion and exits non-zero if any
// criterion fails. Criterion 8 is skipped when the real dataset is absent.

#include "oracles.hpp"

#include "windvol/diagnostics.hpp"
#include "windvol/evaluate.hpp"
#include "windvol/io.hpp"
#include "windvol/mvlogarch.hpp"
#include "windvol/pipeline.hpp"
#include "windvol/preprocess.hpp"
#include "windvol/sdpd.hpp"
#include "windvol/stgarch.hpp"
#include "windvol/unigarch.hpp"
#include "windvol/weights.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <iostream>
#include <sstream>

using namespace windvol;
namespace fs = std::filesystem;

namespace {

enum class Verdict { pass, fail, skipped };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int d = 3) { return io::format_fixed(v, d); }

oracle::Dense to_dense(const Matrix& m) {
  oracle::Dense out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::vector<Station> random_network(std::size_t n, double side_m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, side_m);
  std::vector<Station> st(n);
  for (std::size_t i = 0; i < n; ++i) {
    st[i].id = "S" + std::to_string(100 + i);
    st[i].x = u(rng);
    st[i].y = u(rng);
  }
  return st;
}

// ---- 1: likelihood and Moran oracles -----------------------------------

Outcome criterion1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int cases = 0;
  auto track = [&](double a, double b) {
    worst = std::max(worst, std::abs(a - b));
    ++cases;
  };
  for (int rep = 0; rep < 20; ++rep) {
    const auto T = static_cast<Eigen::Index>(50 + rng() % 151);
    Vector e(T);
    for (auto& v : e) v = 0.8 * z(rng);
    const GarchParams g{0.05 + 0.2 * u(rng), 0.3 * u(rng), 0.6 * u(rng)};
    const double h0 = 0.2 + u(rng);
    track(garch_loglik(g, as_span(e), h0), oracle::garch_loglik(g.omega, g.alpha, g.beta, to_std(e), h0));
    const EgarchParams eg{-0.3 * u(rng), 0.3 * u(rng), 0.2 * (u(rng) - 0.5), 0.95 * u(rng)};
    track(egarch_loglik(eg, as_span(e), h0), oracle::egarch_loglik(eg.omega, eg.alpha, eg.gamma, eg.beta, to_std(e), h0));
  }
  for (int rep = 0; rep < 10; ++rep) {
    const auto N = static_cast<std::size_t>(5 + rng() % 46);
    const auto T = static_cast<Eigen::Index>(50 + rng() % 151);
    const auto raw = oracle::random_weights(N, 0.2, rng);
    Matrix dense(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = raw[i][j];
    const auto w = WeightMatrix::from_dense(dense);
    const auto W = to_dense(w.dense());

    StarmaGarchParams p;
    p.mu = 0.1 * z(rng);
    p.phi = 0.8 * (u(rng) - 0.5);
    p.theta = 0.8 * (u(rng) - 0.5);
    p.omega = 0.05 + 0.2 * u(rng);
    p.alpha = 0.3 * u(rng);
    p.beta = 0.6 * u(rng);
    const auto sim = st_simulate(p, w, T, 50, rng());
    track(st_loglik(p, w, sim.e), oracle::st_loglik(p.mu, p.phi, p.theta, std::vector<double>(N, p.omega), p.alpha,
                                                     p.beta, W, to_dense(sim.e)));

    SdpdParams s;
    s.rho = 1.6 * (u(rng) - 0.5);
    s.lambda = 0.6 * (u(rng) - 0.5);
    s.gamma = Vector::NullaryExpr(static_cast<Eigen::Index>(N), [&] { return 0.8 * (u(rng) - 0.5); });
    s.intercept = Vector::NullaryExpr(static_cast<Eigen::Index>(N), [&] { return z(rng); });
    const Matrix y = sdpd_simulate(s, w, T, 50, 1.0, rng());
    const double sigma2 = 0.5 + u(rng);
    track(sdpd_loglik(s, w, y, sigma2),
          oracle::sdpd_loglik(s.rho, to_std(s.gamma), s.lambda, to_std(s.intercept), W, to_dense(y), sigma2));

    Vector x(static_cast<Eigen::Index>(N));
    for (auto& v : x) v = z(rng);
    track(morans_i(as_span(x), w).i, oracle::moran_i(to_std(x), W));
  }
  // Randomisation moments against exact permutation enumeration.
  for (int rep = 0; rep < 5; ++rep) {
    const std::size_t N = 5 + static_cast<std::size_t>(rep % 3);
    const auto raw = oracle::random_weights(N, 0.5, rng);
    Matrix dense(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j) dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = raw[i][j];
    const auto w = WeightMatrix::from_dense(dense);
    Vector x(static_cast<Eigen::Index>(N));
    for (auto& v : x) v = z(rng) + (u(rng) < 0.3 ? 3.0 : 0.0);
    const auto r = morans_i(as_span(x), w);
    const auto [mean, var] = oracle::moran_permutation_moments(to_std(x), to_dense(w.dense()));
    track(r.expected, mean);
    track(r.variance, var);
  }
  const double dt = seconds_since(t0);
  const bool ok = worst <= 1e-9 && dt < 1.0;
  return {ok ? Verdict::pass : Verdict::fail,
          std::to_string(cases) + " randomized cases, max abs diff " + io::format_double(worst) + ", " + fmt(dt, 2) + " s"};
}

// ---- 2: STARMAGARCH recovery ---------------------------------------------

Outcome criterion2() {
  const auto t0 = Clock::now();
  const auto w = distance_band_weights(random_network(30, 200000.0, 7), 55000.0);
  StarmaGarchParams truth;
  truth.mu = -0.0061;
  truth.phi = -0.5969;
  truth.theta = 0.6601;
  truth.omega = 0.0962;
  truth.alpha = 0.2040;
  truth.beta = 0.5018;
  const Vector target = (Vector(6) << truth.mu, truth.phi, truth.theta, truth.omega, truth.alpha, truth.beta).finished();
  int within = 0;
  std::ostringstream worst;
  for (int seed = 1; seed <= 10; ++seed) {
    const auto sim = st_simulate(truth, w, 2000, 500, static_cast<std::uint64_t>(seed));
    const auto fit = fit_st(sim.e, w);
    const Vector err = (fit.estimates.head(6) - target).cwiseAbs();
    Eigen::Index k;
    const double m = err.maxCoeff(&k);
    if (m <= 0.05) ++within;
    worst << (seed > 1 ? " " : "") << fit.names[static_cast<std::size_t>(k)] << "=" << fmt(m);
  }
  const double dt = seconds_since(t0);
  const bool ok = within >= 9 && dt < 300.0;
  return {ok ? Verdict::pass : Verdict::fail, std::to_string(within) + "/10 seeds within 0.05 (worst error per seed: " +
                                                  worst.str() + "), " + fmt(dt, 1) + " s"};
}

// ---- 3: univariate recovery ----------------------------------------------

Outcome criterion3() {
  const auto t0 = Clock::now();
  const Vector tg = (Vector(3) << 0.1, 0.1, 0.8).finished();
  const Vector te = (Vector(4) << -0.1, 0.15, -0.05, 0.9).finished();
  Vector mae_g = Vector::Zero(3), mae_e = Vector::Zero(4);
  int ok_g = 0, ok_e = 0;
  constexpr int kSeeds = 20;
  for (int s = 1; s <= kSeeds; ++s) {
    const auto e = simulate_garch({0.1, 0.1, 0.8}, 5000, static_cast<std::uint64_t>(s));
    const Vector dg = (fit_garch(as_span(e)).params - tg).cwiseAbs();
    mae_g += dg / kSeeds;
    ok_g += dg.maxCoeff() <= 0.05;
    const auto x = simulate_egarch({-0.1, 0.15, -0.05, 0.9}, 5000, static_cast<std::uint64_t>(s));
    const Vector de = (fit_egarch(as_span(x)).params - te).cwiseAbs();
    mae_e += de / kSeeds;
    ok_e += de.maxCoeff() <= 0.05;
  }
  const double dt = seconds_since(t0);
  // Per-parameter mean error within tolerance and at least 90% of seeds fully within it.
  const bool ok = mae_g.maxCoeff() <= 0.05 && mae_e.maxCoeff() <= 0.05 && ok_g >= 18 && ok_e >= 18 && dt < 60.0;
  return {ok ? Verdict::pass : Verdict::fail,
          "GARCH " + std::to_string(ok_g) + "/20 seeds within 0.05 (max mean error " + fmt(mae_g.maxCoeff()) +
              "), EGARCH " + std::to_string(ok_e) + "/20 (max mean error " + fmt(mae_e.maxCoeff()) + "), " + fmt(dt, 1) +
              " s"};
}

// ---- 4: bivariate log-ARCH recovery ----------------------------------------

Outcome criterion4() {
  const auto t0 = Clock::now();
  const auto w = distance_band_weights(random_network(20, 150000.0, 11), 55000.0);
  MvSystem p;
  p.intercept << -0.835, -0.372;
  p.psi << 0.558, 0.163, 0.135, 0.577;
  p.pi << 0.067, 0.054, 0.022, 0.113;
  int within = 0;
  std::ostringstream errs;
  for (int s = 1; s <= 5; ++s) {
    const auto eps = mv_simulate_logarch(p, w, 1500, 300, static_cast<std::uint64_t>(s));
    const auto& q = fit_mv_logarch(eps, w).system.params;
    const double m = std::max({(q.intercept - p.intercept).cwiseAbs().maxCoeff(), (q.psi - p.psi).cwiseAbs().maxCoeff(),
                               (q.pi - p.pi).cwiseAbs().maxCoeff()});
    if (m <= 0.08) ++within;
    errs << (s > 1 ? " " : "") << fmt(m);
  }
  const double dt = seconds_since(t0);
  const bool ok = within >= 4 && dt < 300.0;
  return {ok ? Verdict::pass : Verdict::fail, std::to_string(within) + "/5 seeds with every entry within 0.08 (max errors " +
                                                  errs.str() + "), " + fmt(dt, 1) + " s"};
}

// ---- 5: SDPD versus AR(1) residual Moran pass rates ----------------------

Outcome criterion5() {
  const auto t0 = Clock::now();
  const auto w = distance_band_weights(random_network(30, 200000.0, 7), 55000.0);
  SdpdParams p;
  p.rho = 0.5;
  p.gamma = Vector::Constant(30, 0.3);
  p.lambda = 0.2;
  double min_gap = 1e9;
  std::ostringstream rates;
  for (int s = 1; s <= 3; ++s) {
    const Matrix y = sdpd_simulate(p, w, 2000, 200, 1.0, static_cast<std::uint64_t>(s));
    const auto fit = fit_sdpd(y, w);
    Matrix ar(y.rows() - 1, y.cols());
    for (Eigen::Index i = 0; i < y.cols(); ++i) ar.col(i) = fit_ar1(Vector(y.col(i))).residuals;
    std::vector<double> p_sdpd, p_ar;
    for (const auto& m : moran_rows(fit.residuals, w, false)) p_sdpd.push_back(m.p_value);
    for (const auto& m : moran_rows(ar, w, false)) p_ar.push_back(m.p_value);
    const double a = pass_rate(p_sdpd), b = pass_rate(p_ar);
    min_gap = std::min(min_gap, a - b);
    rates << (s > 1 ? "; " : "") << fmt(a, 1) << "% vs " << fmt(b, 1) << "%";
  }
  const double dt = seconds_since(t0);
  const bool ok = min_gap >= 20.0 && dt < 120.0;
  return {ok ? Verdict::pass : Verdict::fail, "SDPD vs AR(1) pass rates " + rates.str() + ", smallest gap " + fmt(min_gap, 1) +
                                                  " points, " + fmt(dt, 1) + " s"};
}

// ---- 6: metric identities -------------------------------------------------

Outcome criterion6() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z(0.0, 1.0);
  bool ok = true;
  std::string why;
  // RMSFE >= MAFE on random rows.
  for (int rep = 0; rep < 200 && ok; ++rep) {
    Matrix eps(30, 4), h(30, 4);
    for (auto& v : eps.reshaped()) v = z(rng);
    for (auto& v : h.reshaped()) v = std::exp(z(rng));
    for (auto kind : {ProxyKind::rv, ProxyKind::ewma, ProxyKind::rv5_sq, ProxyKind::rv5_abs}) {
      const auto s = score(h, make_proxy(kind, eps, 0.94).values);
      if (s.rmsfe < s.mafe) ok = false, why = "RMSFE below MAFE";
    }
  }
  // score(h, h) = (0, 0).
  Matrix h(10, 3);
  for (auto& v : h.reshaped()) v = std::exp(z(rng));
  const auto self = score(h, h);
  if (self.rmsfe != 0.0 || self.mafe != 0.0) ok = false, why = "score(h, h) not zero";
  // EWMA fixed point: constant squared residuals started at that level stay there.
  const Matrix c = Matrix::Constant(50, 2, 1.5);
  const auto fp = ewma(c, 0.94);
  if ((fp.values.array() - 2.25).abs().maxCoeff() > 1e-12) ok = false, why = "EWMA fixed point";
  // Hand recursion.
  Matrix e(3, 1);
  e << 1.0, 2.0, -1.0;
  const auto hand = ewma(e, 0.5);
  const double expect[] = {1.0, 0.5 * 1.0 + 0.5 * 4.0, 0.5 * 2.5 + 0.5 * 1.0};
  for (int t = 0; t < 3; ++t)
    if (std::abs(hand.values(t, 0) - expect[t]) > 1e-12) ok = false, why = "EWMA hand recursion";
  return {ok ? Verdict::pass : Verdict::fail, ok ? "200 random score rows, self-score, EWMA fixed point and hand cases" : why};
}

// ---- 7: weight-matrix invariants -------------------------------------------

Outcome criterion7() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad = 0;
  for (int net = 0; net < 200; ++net) {
    const auto n = 5 + static_cast<std::size_t>(rng() % 60);
    const auto st = random_network(n, 50000.0 + 250000.0 * u(rng), rng());
    const int k = 1 + static_cast<int>(rng() % std::min<std::size_t>(n - 1, 8));
    DirectionalParams dp;
    for (std::size_t i = 0; i < n; ++i) dp.prevailing_dir.push_back(360.0 * u(rng));
    dp.half_angle = 10.0 + 80.0 * u(rng);
    dp.cutoff = 20000.0 + 100000.0 * u(rng);
    dp.decay = 20000.0 + 60000.0 * u(rng);
    const std::vector<WeightMatrix> ws{knn_weights(st, k), distance_band_weights(st, 10000.0 + 60000.0 * u(rng)),
                                       directional_weights(st, dp)};
    for (const auto& w : ws) {
      const Vector rs = w.row_sums();
      for (Eigen::Index i = 0; i < rs.size(); ++i)
        if (std::abs(rs[i] - 1.0) > 1e-12 && rs[i] != 0.0) ++bad;
      for (const auto& e : w.entries())
        if (e.w < 0.0 || e.i == e.j) ++bad;
    }
    const Matrix kd = ws[0].dense();
    for (Eigen::Index i = 0; i < kd.rows(); ++i)
      if ((kd.row(i).array() > 0.0).count() != k) ++bad;
    const Matrix dd = ws[2].dense();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double dist = std::hypot(st[i].x - st[j].x, st[i].y - st[j].y);
        const bool in_cone = angular_distance_deg(bearing_deg(st[i], st[j]), dp.prevailing_dir[i]) <= dp.half_angle;
        if ((!in_cone || dist > dp.cutoff) && dd(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) ++bad;
      }
  }
  const double dt = seconds_since(t0);
  const bool ok = bad == 0 && dt < 10.0;
  return {ok ? Verdict::pass : Verdict::fail,
          "200 random networks, " + std::to_string(bad) + " violations, " + fmt(dt, 2) + " s"};
}

// ---- 8: real-data reproduction ---------------------------------------------

Outcome criterion8(const fs::path& root) {
  const auto cfg_path = root / "configs" / "agrimonia.toml";
  ExperimentConfig cfg;
  try {
    ConfigOverrides ov;
    ov.output = fs::temp_directory_path() / "windvol_acceptance_agrimonia";
    cfg = load_config(cfg_path, ov);
  } catch (const Error& e) {
    return {Verdict::fail, std::string("cannot load configs/agrimonia.toml: ") + e.what()};
  }
  for (const auto& [v, p] : cfg.data)
    if (!fs::exists(p)) return {Verdict::skipped, "dataset not present at " + p.string()};
  reproduce(cfg);
  const auto doc = nlohmann::json::parse(io::read_text(cfg.output / "report" / "reference_comparison.json"));
  int failed = 0;
  for (const auto& c : doc.at("checks"))
    if (!c.at("pass").get<bool>()) ++failed;
  const bool ok = doc.at("all_required_pass").get<bool>();
  return {ok ? Verdict::pass : Verdict::fail, std::string("required comparisons ") + (ok ? "within tolerance" : "outside tolerance") +
                                                  ", " + std::to_string(failed) + " structural checks failed"};
}

// ---- 9: determinism --------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = io::read_text(e.path());
  return out;
}

Outcome criterion9(const fs::path& root) {
  const auto t0 = Clock::now();
  const auto base = fs::temp_directory_path() / "windvol_acceptance_determinism";
  fs::remove_all(base);
  std::vector<std::map<std::string, std::string>> runs;
  for (int threads : {1, 3, 1}) {
    ConfigOverrides ov;
    ov.output = base / ("run" + std::to_string(runs.size()));
    ov.threads = threads;
    run_all(load_config(root / "configs" / "synthetic.toml", ov));
    runs.push_back(snapshot(*ov.output));
  }
  const bool same = runs[0] == runs[1] && runs[0] == runs[2];
  const bool has_report = runs[0].count("report/report.md") && runs[0].at("report/report.md").find("SYNTHETIC") != std::string::npos;
  fs::remove_all(base);
  return {same && has_report ? Verdict::pass : Verdict::fail,
          std::to_string(runs[0].size()) + " artifacts, byte-identical across 3 runs (threads 1, 3, 1): " +
              (same ? "yes" : "no") + ", " + fmt(seconds_since(t0), 1) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path(WINDVOL_SOURCE_DIR);
  const std::vector<std::function<Outcome()>> criteria{
      criterion1, criterion2, criterion3, criterion4, criterion5, criterion6, criterion7,
      [&] { return criterion8(root); }, [&] { return criterion9(root); }};
  bool any_fail = false;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("threw: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIPPED";
    any_fail = any_fail || o.verdict == Verdict::fail;
    std::cout << "criterion " << i + 1 << ": " << tag << " (" << o.detail << ")" << std::endl;
  }
  return any_fail ? 1 : 0;
}
