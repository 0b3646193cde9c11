#include "windvol/preprocess.hpp"

#include "windvol/io.hpp"
#include "windvol/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace windvol {
namespace {

// Loess building blocks. Positions are 1-based as in the classic Fortran STL
// so the window arithmetic reads the same.

bool loess_est(std::span<const double> y, int len, int degree, double xs, int nleft, int nright,
               std::span<const double> rw, std::vector<double>& w, double& out) {
  const int n = static_cast<int>(y.size());
  const double range = static_cast<double>(n) - 1.0;
  double h = std::max(xs - nleft, nright - xs);
  if (len > n) h += static_cast<double>((len - n) / 2);
  const double h9 = 0.999 * h;
  const double h1 = 0.001 * h;

  double a = 0.0;
  for (int j = nleft; j <= nright; ++j) {
    double wj = 0.0;
    const double r = std::abs(j - xs);
    if (r <= h9) {
      if (r <= h1) {
        wj = 1.0;
      } else {
        const double q = r / h;
        wj = std::pow(1.0 - q * q * q, 3);
      }
      if (!rw.empty()) wj *= rw[j - 1];
      a += wj;
    }
    w[j - 1] = wj;
  }
  if (a <= 0.0) return false;
  for (int j = nleft; j <= nright; ++j) w[j - 1] /= a;

  if (h > 0.0 && degree > 0) {
    double centre = 0.0;
    for (int j = nleft; j <= nright; ++j) centre += w[j - 1] * j;
    double b = xs - centre;
    double c = 0.0;
    for (int j = nleft; j <= nright; ++j) c += w[j - 1] * (j - centre) * (j - centre);
    if (std::sqrt(c) > 0.001 * range) {
      b /= c;
      for (int j = nleft; j <= nright; ++j) w[j - 1] *= b * (j - centre) + 1.0;
    }
  }
  double s = 0.0;
  for (int j = nleft; j <= nright; ++j) s += w[j - 1] * y[j - 1];
  out = s;
  return true;
}

// Loess smooth evaluated at every position.
std::vector<double> loess_smooth(std::span<const double> y, int len, int degree,
                                 std::span<const double> rw) {
  const int n = static_cast<int>(y.size());
  std::vector<double> ys(y.begin(), y.end());
  if (n < 2) return ys;
  std::vector<double> w(n);
  int nleft = 1, nright = std::min(len, n);
  if (len >= n) {
    nleft = 1;
    nright = n;
    for (int i = 1; i <= n; ++i)
      if (!loess_est(y, len, degree, i, nleft, nright, rw, w, ys[i - 1])) ys[i - 1] = y[i - 1];
    return ys;
  }
  const int nsh = (len + 1) / 2;
  for (int i = 1; i <= n; ++i) {
    if (i > nsh && nright != n) {
      ++nleft;
      ++nright;
    }
    if (!loess_est(y, len, degree, i, nleft, nright, rw, w, ys[i - 1])) ys[i - 1] = y[i - 1];
  }
  return ys;
}

std::vector<double> moving_average(const std::vector<double>& x, int len) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(std::max(0, n - len + 1));
  double s = 0.0;
  for (int i = 0; i < len; ++i) s += x[i];
  out[0] = s / len;
  for (int i = 1; i < static_cast<int>(out.size()); ++i) {
    s += x[i + len - 1] - x[i - 1];
    out[i] = s / len;
  }
  return out;
}

int next_odd(double v) {
  int k = static_cast<int>(std::ceil(v));
  if (k % 2 == 0) ++k;
  return k;
}

struct Subseries {
  std::vector<std::size_t> index;  // time indices in order
};

}  // namespace

std::vector<int> calendar_phases(const std::vector<Date>& dates, int period) {
  std::vector<int> phases(dates.size());
  for (std::size_t t = 0; t < dates.size(); ++t)
    phases[t] = std::min(day_of_year(dates[t]), period) - 1;
  return phases;
}

Decomposition stl_decompose(std::span<const double> series, int period, const StlOptions& opts) {
  std::vector<int> phases(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) phases[t] = static_cast<int>(t % period);
  return stl_decompose(series, phases, period, opts);
}

Decomposition stl_decompose(std::span<const double> y, std::span<const int> phases, int period,
                            const StlOptions& opts) {
  const int n = static_cast<int>(y.size());
  const int np = period;
  if (np < 2) throw Error(Errc::InvalidArgument, "STL period must be at least 2");
  if (n < 2 * np) throw Error(Errc::SeriesTooShort, "STL needs at least two full periods");
  if (phases.size() != y.size()) throw Error(Errc::ShapeMismatch, "phase vector length");
  for (double v : y)
    if (!std::isfinite(v)) throw Error(Errc::NonFinite, "non-finite value in STL input");

  const bool periodic = opts.seasonal_window <= 0;
  const int ns = periodic ? 10 * n + 1 : std::max(3, opts.seasonal_window | 1);
  const int sdeg = periodic ? 0 : opts.seasonal_degree;
  const int nt = opts.trend_window > 0 ? (opts.trend_window | 1)
                                       : next_odd(1.5 * np / (1.0 - 1.5 / ns));
  const int nl = opts.lowpass_window > 0 ? (opts.lowpass_window | 1) : next_odd(np);

  std::vector<Subseries> cycles(np);
  for (int t = 0; t < n; ++t) {
    if (phases[t] < 0 || phases[t] >= np)
      throw Error(Errc::InvalidArgument, "cycle position outside [0, period)");
    cycles[phases[t]].index.push_back(static_cast<std::size_t>(t));
  }
  for (const auto& c : cycles)
    if (c.index.empty()) throw Error(Errc::SeriesTooShort, "empty cycle subseries");

  // Phase of each slot in the one-period extensions before and after the data.
  std::vector<int> pre_phase(np), post_phase(np);
  for (int u = 0; u < np; ++u) {
    pre_phase[u] = ((phases[0] + (u - np)) % np + np) % np;
    post_phase[u] = (phases[n - 1] + 1 + u) % np;
  }

  std::vector<double> trend(n, 0.0), season(n, 0.0), rw;
  std::vector<double> work(n), ext(n + 2 * np);
  std::vector<double> w;

  const int passes = 1 + std::max(0, opts.robustness_iterations);
  for (int pass = 0; pass < passes; ++pass) {
    for (int it = 0; it < std::max(1, opts.inner_iterations); ++it) {
      for (int t = 0; t < n; ++t) work[t] = y[t] - trend[t];

      // cycle-subseries smoothing with one extrapolated point at each end
      std::vector<double> before(np), after(np);
      for (int k = 0; k < np; ++k) {
        const auto& idx = cycles[k].index;
        const int m = static_cast<int>(idx.size());
        std::vector<double> sub(m), subw;
        for (int j = 0; j < m; ++j) sub[j] = work[idx[j]];
        if (!rw.empty()) {
          subw.resize(m);
          for (int j = 0; j < m; ++j) subw[j] = rw[idx[j]];
        }
        auto smooth = loess_smooth(sub, ns, sdeg, subw);
        for (int j = 0; j < m; ++j) ext[np + idx[j]] = smooth[j];
        w.assign(m, 0.0);
        double v = 0.0;
        const int nright = std::min(ns, m);
        before[k] = loess_est(sub, ns, sdeg, 0.0, 1, nright, subw, w, v) ? v : smooth.front();
        const int nleft = std::max(1, m - ns + 1);
        after[k] = loess_est(sub, ns, sdeg, m + 1.0, nleft, m, subw, w, v) ? v : smooth.back();
      }
      for (int u = 0; u < np; ++u) {
        ext[u] = before[pre_phase[u]];
        ext[n + np + u] = after[post_phase[u]];
      }

      // low-pass filter of the extended cycle series
      auto low = moving_average(ext, np);
      low = moving_average(low, np);
      low = moving_average(low, 3);
      low = loess_smooth(low, nl, 1, {});

      for (int t = 0; t < n; ++t) {
        season[t] = ext[np + t] - low[t];
        work[t] = y[t] - season[t];
      }
      trend = loess_smooth(work, nt, 1, rw);
    }
    if (pass + 1 == passes) break;

    // bisquare robustness weights
    std::vector<double> r(n);
    for (int t = 0; t < n; ++t) r[t] = std::abs(y[t] - season[t] - trend[t]);
    std::vector<double> sorted = r;
    const int mid0 = n / 2, mid1 = n - n / 2 - 1;
    std::nth_element(sorted.begin(), sorted.begin() + mid0, sorted.end());
    const double a0 = sorted[mid0];
    std::nth_element(sorted.begin(), sorted.begin() + mid1, sorted.end());
    const double cmad = 3.0 * (a0 + sorted[mid1]);
    rw.assign(n, 1.0);
    const double c9 = 0.999 * cmad, c1 = 0.001 * cmad;
    for (int t = 0; t < n; ++t) {
      if (r[t] <= c1) {
        rw[t] = 1.0;
      } else if (r[t] <= c9) {
        const double q = r[t] / cmad;
        rw[t] = (1.0 - q * q) * (1.0 - q * q);
      } else {
        rw[t] = 0.0;
      }
    }
  }

  if (periodic) {
    std::vector<double> mean(np, 0.0);
    for (int k = 0; k < np; ++k) {
      for (auto t : cycles[k].index) mean[k] += season[t];
      mean[k] /= static_cast<double>(cycles[k].index.size());
    }
    for (int t = 0; t < n; ++t) season[t] = mean[phases[t]];
  }

  Decomposition d;
  d.seasonal = Eigen::Map<const Vector>(season.data(), n);
  d.trend = Eigen::Map<const Vector>(trend.data(), n);
  d.remainder.resize(n);
  for (int t = 0; t < n; ++t) d.remainder[t] = y[t] - season[t] - trend[t];
  return d;
}

Vector ar1_residuals(std::span<const double> x, double phi) {
  const auto T = static_cast<Eigen::Index>(x.size());
  Vector e(std::max<Eigen::Index>(0, T - 1));
  for (Eigen::Index t = 1; t < T; ++t) e[t - 1] = x[t] - phi * x[t - 1];
  return e;
}

Ar1Fit fit_ar1(std::span<const double> x) {
  if (x.size() < 30) throw Error(Errc::SeriesTooShort, "AR(1) fit needs at least 30 observations");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double scale = std::max({1.0, std::abs(*lo), std::abs(*hi)});
  if (*hi - *lo <= 1e-12 * scale) throw Error(Errc::DegenerateVariance, "constant series");

  double num = 0.0, den = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) {
    num += x[t] * x[t - 1];
    den += x[t - 1] * x[t - 1];
  }
  if (den <= 0.0) throw Error(Errc::DegenerateVariance, "zero lagged variance");

  Ar1Fit fit;
  fit.phi = num / den;
  if (!(std::abs(fit.phi) < 1.0)) {
    fit.phi = fit.phi > 0 ? 0.999 : -0.999;
    fit.clamped = true;
  }
  fit.residuals = ar1_residuals(x, fit.phi);
  fit.sigma2 = fit.residuals.squaredNorm() / static_cast<double>(fit.residuals.size());
  return fit;
}

ResidualPanel preprocess_panel(const Panel& panel, const PreprocessOptions& opts) {
  const auto T = panel.T();
  const auto N = panel.N();
  const auto phases = opts.period == 365 ? calendar_phases(panel.dates, opts.period)
                                         : std::vector<int>{};
  const Eigen::Index fit_rows = opts.fit_rows > 0 ? std::min(opts.fit_rows, T) : T;

  ResidualPanel out;
  out.residuals.resize(std::max<Eigen::Index>(0, T - 1), N);
  out.remainder.resize(T, N);
  out.phi.resize(N);
  out.decompositions.resize(N);
  out.station_ids = panel.station_ids();
  out.dates.assign(panel.dates.begin() + std::min<Eigen::Index>(1, T), panel.dates.end());

  parallel_for(static_cast<std::size_t>(N), opts.threads, [&](std::size_t col) {
    const auto i = static_cast<Eigen::Index>(col);
    const Vector series = panel.values.col(i);
    const std::span<const double> s(series.data(), series.size());
    try {
      auto dec = phases.empty() ? stl_decompose(s, opts.period, opts.stl)
                                : stl_decompose(s, phases, opts.period, opts.stl);
      const std::span<const double> rem(dec.remainder.data(), dec.remainder.size());
      const auto fit = fit_ar1(rem.first(static_cast<std::size_t>(fit_rows)));
      out.phi[i] = fit.phi;
      out.residuals.col(i) = ar1_residuals(rem, fit.phi);
      out.remainder.col(i) = dec.remainder;
      out.decompositions[col] = std::move(dec);
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), panel.stations[col].id);
    }
  });
  return out;
}

void write_residuals(const Matrix& residuals, const std::vector<Date>& dates,
                     const std::vector<std::string>& ids, const std::filesystem::path& path,
                     const std::string& provenance) {
  if (static_cast<Eigen::Index>(dates.size()) != residuals.rows() ||
      static_cast<Eigen::Index>(ids.size()) != residuals.cols())
    throw Error(Errc::ShapeMismatch, "residual panel shape does not match its axes");
  std::ostringstream out;
  if (!provenance.empty()) out << '#' << provenance << '\n';
  out << "date,station_id,residual\n";
  for (Eigen::Index t = 0; t < residuals.rows(); ++t) {
    const auto d = format_date(dates[t]);
    for (Eigen::Index i = 0; i < residuals.cols(); ++i)
      out << d << ',' << ids[i] << ',' << io::format_double(residuals(t, i)) << '\n';
  }
  io::write_text(path, out.str());
}

LoadedResiduals read_residuals(const std::filesystem::path& path) {
  const auto table = io::read_csv(path);
  const auto c_date = table.column("date");
  const auto c_id = table.column("station_id");
  const auto c_val = table.column("residual");
  std::map<std::string, std::size_t> id_index;
  std::map<Date, std::size_t> date_index;
  for (const auto& row : table.rows) {
    id_index.emplace(row[c_id], 0);
    date_index.emplace(parse_date(row[c_date]), 0);
  }
  LoadedResiduals out;
  for (auto& [id, k] : id_index) {
    k = out.station_ids.size();
    out.station_ids.push_back(id);
  }
  for (auto& [d, k] : date_index) {
    k = out.dates.size();
    out.dates.push_back(d);
  }
  out.residuals = Matrix::Constant(static_cast<Eigen::Index>(out.dates.size()),
                                   static_cast<Eigen::Index>(out.station_ids.size()), std::nan(""));
  for (const auto& row : table.rows)
    out.residuals(static_cast<Eigen::Index>(date_index[parse_date(row[c_date])]),
                  static_cast<Eigen::Index>(id_index[row[c_id]])) = io::parse_double(row[c_val]);
  for (Eigen::Index t = 0; t < out.residuals.rows(); ++t)
    for (Eigen::Index i = 0; i < out.residuals.cols(); ++i)
      if (std::isnan(out.residuals(t, i)))
        throw Error(Errc::MissingCell, "missing residual on " + format_date(out.dates[t]),
                    out.station_ids[i]);
  return out;
}

}  // namespace windvol
