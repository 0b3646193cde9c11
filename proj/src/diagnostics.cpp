#include "windvol/diagnostics.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>

namespace windvol {

double chi2_sf(double x, double df) {
  if (!(x > 0.0)) return 1.0;
  boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, x));
}

double normal_two_sided(double z) {
  return std::clamp(std::erfc(std::abs(z) / std::sqrt(2.0)), 0.0, 1.0);
}

TestResult ljung_box(std::span<const double> x, int lags) {
  const auto T = static_cast<int>(x.size());
  if (lags < 1) throw Error(Errc::InvalidArgument, "Ljung-Box needs at least one lag");
  if (T <= lags) throw Error(Errc::TooFewObservations, "Ljung-Box needs more observations than lags");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= T;
  double denom = 0.0;
  for (double v : x) denom += (v - mean) * (v - mean);
  if (denom <= 0.0) throw Error(Errc::ConstantSeries, "Ljung-Box on a constant series");

  double q = 0.0;
  for (int h = 1; h <= lags; ++h) {
    double c = 0.0;
    for (int t = h; t < T; ++t) c += (x[t] - mean) * (x[t - h] - mean);
    const double rho = c / denom;
    q += rho * rho / static_cast<double>(T - h);
  }
  q *= static_cast<double>(T) * (T + 2.0);
  return {q, static_cast<double>(lags), chi2_sf(q, lags)};
}

TestResult arch_lm(std::span<const double> e, int lags) {
  const auto T = static_cast<Eigen::Index>(e.size());
  if (lags < 1) throw Error(Errc::InvalidArgument, "ARCH-LM needs at least one lag");
  if (T <= 2 * lags) throw Error(Errc::TooFewObservations, "ARCH-LM needs T > 2 * lags");
  const Eigen::Index n = T - lags;
  Matrix X(n, lags + 1);
  Vector y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index t = r + lags;
    y[r] = e[t] * e[t];
    X(r, 0) = 1.0;
    for (int k = 1; k <= lags; ++k) X(r, k) = e[t - k] * e[t - k];
  }
  const double ybar = y.mean();
  const double tss = (y.array() - ybar).square().sum();
  if (!(tss > 1e-300)) throw Error(Errc::SingularRegression, "ARCH-LM: constant squared residuals");
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  qr.setThreshold(1e-12);
  if (qr.rank() < X.cols()) throw Error(Errc::SingularRegression, "ARCH-LM design is rank deficient");
  const Vector beta = qr.solve(y);
  const double rss = (y - X * beta).squaredNorm();
  const double r2 = std::clamp(1.0 - rss / tss, 0.0, 1.0);
  const double stat = static_cast<double>(n) * r2;
  return {stat, static_cast<double>(lags), chi2_sf(stat, lags)};
}

MoranResult morans_i(std::span<const double> values, const WeightMatrix& w) {
  if (static_cast<Eigen::Index>(values.size()) != w.n())
    throw Error(Errc::DimensionMismatch, "Moran's I: values and weights differ in size");

  const auto isolated = w.isolated();
  std::vector<Eigen::Index> keep;
  std::vector<Eigen::Index> position(values.size(), -1);
  {
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < w.n(); ++i) {
      if (k < isolated.size() && isolated[k] == i) {
        ++k;
        continue;
      }
      position[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(keep.size());
      keep.push_back(i);
    }
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  if (w.nonzeros() == 0) throw Error(Errc::AllZeroWeights, "Moran's I: weight matrix has no links");
  if (n < 4) throw Error(Errc::TooFewObservations, "Moran's I needs at least 4 linked observations");

  Vector z(n);
  for (Eigen::Index a = 0; a < n; ++a) z[a] = values[static_cast<std::size_t>(keep[a])];
  z.array() -= z.mean();
  const double m2 = z.squaredNorm();
  const double scale = std::max(1.0, z.cwiseAbs().maxCoeff());
  if (!(m2 > 1e-24 * scale * scale * n)) throw Error(Errc::ConstantValues, "Moran's I: constant values");

  // weights restricted to the kept nodes
  double s0 = 0.0, cross = 0.0;
  Vector rowsum = Vector::Zero(n), colsum = Vector::Zero(n);
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& e : w.entries()) {
    const auto a = position[static_cast<std::size_t>(e.i)];
    const auto b = position[static_cast<std::size_t>(e.j)];
    if (a < 0 || b < 0) continue;
    s0 += e.w;
    cross += e.w * z[a] * z[b];
    rowsum[a] += e.w;
    colsum[b] += e.w;
    trip.emplace_back(a, b, e.w);
  }
  if (!(s0 > 0.0)) throw Error(Errc::AllZeroWeights, "Moran's I: no links among linked nodes");

  Eigen::SparseMatrix<double> ws(n, n);
  ws.setFromTriplets(trip.begin(), trip.end());
  const Eigen::SparseMatrix<double> sym = Eigen::SparseMatrix<double>(ws.transpose()) + ws;
  const double s1 = 0.5 * sym.squaredNorm();
  const double s2 = (rowsum + colsum).squaredNorm();

  const double nd = static_cast<double>(n);
  const double m4 = z.array().pow(4).sum();
  const double b2 = nd * m4 / (m2 * m2);

  MoranResult r;
  r.used = n;
  r.dropped = static_cast<Eigen::Index>(isolated.size());
  r.i = nd / s0 * cross / m2;
  r.expected = -1.0 / (nd - 1.0);
  const double num1 = nd * ((nd * nd - 3.0 * nd + 3.0) * s1 - nd * s2 + 3.0 * s0 * s0);
  const double num2 = b2 * ((nd * nd - nd) * s1 - 2.0 * nd * s2 + 6.0 * s0 * s0);
  const double den = (nd - 1.0) * (nd - 2.0) * (nd - 3.0) * s0 * s0;
  r.variance = (num1 - num2) / den - r.expected * r.expected;
  r.z = r.variance > 0.0 ? (r.i - r.expected) / std::sqrt(r.variance) : 0.0;
  r.p_value = r.variance > 0.0 ? normal_two_sided(r.z) : 1.0;
  return r;
}

double excess_kurtosis(std::span<const double> x) {
  const auto T = static_cast<double>(x.size());
  if (x.size() < 4) throw Error(Errc::TooFewObservations, "kurtosis needs at least 4 observations");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= T;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = (v - mean) * (v - mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= T;
  m4 /= T;
  if (!(m2 > 0.0)) throw Error(Errc::ConstantSeries, "kurtosis of a constant series");
  return m4 / (m2 * m2) - 3.0;
}

double pass_rate(std::span<const double> p, double level) {
  if (p.empty()) throw Error(Errc::EmptyList, "pass rate over an empty list");
  const auto passed = std::count_if(p.begin(), p.end(), [&](double v) { return v > level; });
  return 100.0 * static_cast<double>(passed) / static_cast<double>(p.size());
}

double pass_rate(const std::vector<TestResult>& results, double level) {
  std::vector<double> p;
  p.reserve(results.size());
  for (const auto& r : results) p.push_back(r.p_value);
  return pass_rate(p, level);
}

std::vector<TestResult> ljung_box_columns(const Matrix& panel, int lags, bool squared) {
  std::vector<TestResult> out;
  out.reserve(static_cast<std::size_t>(panel.cols()));
  for (Eigen::Index i = 0; i < panel.cols(); ++i) {
    Vector c = panel.col(i);
    if (squared) c = c.array().square();
    out.push_back(ljung_box(as_span(c), lags));
  }
  return out;
}

std::vector<MoranResult> moran_rows(const Matrix& panel, const WeightMatrix& w, bool squared,
                                    Eigen::Index* skipped) {
  std::vector<MoranResult> out;
  out.reserve(static_cast<std::size_t>(panel.rows()));
  Eigen::Index skip = 0;
  for (Eigen::Index t = 0; t < panel.rows(); ++t) {
    Vector r = panel.row(t).transpose();
    if (squared) r = r.array().square();
    try {
      out.push_back(morans_i(as_span(r), w));
    } catch (const Error& e) {
      if (e.code() != Errc::ConstantValues) throw;
      ++skip;
    }
  }
  if (skipped) *skipped = skip;
  return out;
}

}  // namespace windvol
