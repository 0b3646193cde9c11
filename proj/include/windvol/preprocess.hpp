#pragma once

#include "windvol/core.hpp"
#include "windvol/ingest.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace windvol {

/// Additive split of a series: input = seasonal + trend + remainder.
struct Decomposition {
  Vector seasonal;
  Vector trend;
  Vector remainder;
};

/// Loess window settings. Zero means "use the standard default".
struct StlOptions {
  int seasonal_window = 0;  // 0 = periodic (cycle means)
  int seasonal_degree = 0;
  int trend_window = 0;     // default: next odd >= 1.5 p / (1 - 1.5 / ns)
  int lowpass_window = 0;   // default: next odd >= p
  int inner_iterations = 2;
  int robustness_iterations = 1;
};

/// STL with cycle position t mod period.
Decomposition stl_decompose(std::span<const double> series, int period,
                            const StlOptions& opts = {});

/// STL with an explicit cycle position in [0, period) for every observation
/// (e.g. day of year, leap day folded onto day 365).
Decomposition stl_decompose(std::span<const double> series, std::span<const int> phases,
                            int period, const StlOptions& opts = {});

inline Decomposition stl_decompose(const Vector& series, int period, const StlOptions& opts = {}) {
  return stl_decompose(std::span<const double>(series.data(), series.size()), period, opts);
}

struct Ar1Fit {
  double phi = 0.0;
  Vector residuals;  // length T - 1, aligned with series[1..]
  double sigma2 = 0.0;
  bool clamped = false;  // estimate fell outside (-1, 1) and was clamped to +-0.999
};

/// Conditional least squares AR(1) without intercept.
Ar1Fit fit_ar1(std::span<const double> series);
inline Ar1Fit fit_ar1(const Vector& series) {
  return fit_ar1(std::span<const double>(series.data(), series.size()));
}

/// AR(1) residuals of `series` for a fixed coefficient.
Vector ar1_residuals(std::span<const double> series, double phi);

struct PreprocessOptions {
  int period = 365;
  StlOptions stl{};
  /// Leading rows used to estimate phi; 0 means all rows. Residuals are
  /// always produced for every row after the first.
  Eigen::Index fit_rows = 0;
  int threads = 1;
};

/// Per-station residuals e_t(s_i) with their dates.
struct ResidualPanel {
  Matrix residuals;                  // (T - 1) x N
  std::vector<Date> dates;           // length T - 1
  std::vector<std::string> station_ids;
  Vector phi;                        // per-station AR(1) coefficient
  std::vector<Decomposition> decompositions;
  Matrix remainder;                  // T x N deseasonalised series
};

/// Cycle positions for daily data: day of year - 1, with day 366 folded onto 364.
std::vector<int> calendar_phases(const std::vector<Date>& dates, int period);

ResidualPanel preprocess_panel(const Panel& panel, const PreprocessOptions& opts = {});

/// Residual panel CSV: date,station_id,residual.
void write_residuals(const Matrix& residuals, const std::vector<Date>& dates,
                     const std::vector<std::string>& station_ids,
                     const std::filesystem::path& path, const std::string& provenance = {});

struct LoadedResiduals {
  Matrix residuals;
  std::vector<Date> dates;
  std::vector<std::string> station_ids;
};
LoadedResiduals read_residuals(const std::filesystem::path& path);

}  // namespace windvol
