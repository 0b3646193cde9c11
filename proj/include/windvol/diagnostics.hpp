#pragma once

#include "windvol/core.hpp"
#include "windvol/weights.hpp"

#include <span>
#include <vector>

namespace windvol {

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;  // chi-square degrees of freedom; 0 for normal-reference tests
  double p_value = 1.0;
};

/// Moran's I under the randomisation assumption.
struct MoranResult {
  double i = 0.0;
  double expected = 0.0;
  double variance = 0.0;
  double z = 0.0;
  double p_value = 1.0;  // two-sided
  Eigen::Index used = 0;     // observations entering the statistic
  Eigen::Index dropped = 0;  // isolated rows removed

  TestResult as_test() const { return {i, 0.0, p_value}; }
};

/// Ljung-Box portmanteau test. No fitted-parameter correction to the degrees
/// of freedom is applied.
TestResult ljung_box(std::span<const double> series, int lags);

/// Engle's ARCH-LM: regress e_t^2 on a constant and `lags` lags of e^2;
/// statistic n R^2 with n = T - lags regression observations.
TestResult arch_lm(std::span<const double> residuals, int lags);

MoranResult morans_i(std::span<const double> values, const WeightMatrix& w);

/// Biased moment estimator m4 / m2^2 - 3.
double excess_kurtosis(std::span<const double> series);

/// Percentage of p-values strictly above `level`.
double pass_rate(std::span<const double> p_values, double level = 0.05);
double pass_rate(const std::vector<TestResult>& results, double level = 0.05);

/// Chi-square upper tail probability.
double chi2_sf(double x, double df);
/// Two-sided standard normal p-value for a z statistic.
double normal_two_sided(double z);

// Panel helpers. Panels are T x N (time in rows).

/// One Ljung-Box test per station column, optionally on squared values.
std::vector<TestResult> ljung_box_columns(const Matrix& panel, int lags, bool squared);
/// Moran's I on every row (cross-section) of the panel. Degenerate rows
/// (constant values) are skipped; `skipped` reports how many.
std::vector<MoranResult> moran_rows(const Matrix& panel, const WeightMatrix& w, bool squared,
                                    Eigen::Index* skipped = nullptr);

inline std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace windvol
