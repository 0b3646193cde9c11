#pragma once

#include "windvol/core.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace windvol {

enum class ProxyKind { rv, ewma, rv5_sq, rv5_abs };
std::string_view to_string(ProxyKind k);
ProxyKind parse_proxy(std::string_view name);

/// Volatility proxy, T x N. Cells that cannot be formed yet (the first four
/// rows of the five-day proxies) hold NaN and are skipped when scoring.
struct ProxySeries {
  ProxyKind kind = ProxyKind::rv;
  double lambda = 0.0;  // ewma only
  Matrix values;
};

inline constexpr double kRiskMetricsLambda = 0.94;

ProxySeries rv(const Matrix& eps);

/// EWMA_t = lambda EWMA_{t-1} + (1 - lambda) eps_t^2, started at eps_1^2
/// unless `init` supplies one starting value per station.
ProxySeries ewma(const Matrix& eps, double lambda = kRiskMetricsLambda,
                 const std::optional<Vector>& init = std::nullopt);

enum class Rv5Mode { sq, abs };
ProxySeries rv5(const Matrix& eps, Rv5Mode mode);

ProxySeries make_proxy(ProxyKind kind, const Matrix& eps, double lambda = kRiskMetricsLambda);

struct Score {
  double rmsfe = 0.0;
  double mafe = 0.0;
  Eigen::Index used = 0;
  /// Proxy cells at or below the floor; unavailable (NaN) cells are not counted.
  Eigen::Index excluded = 0;
};

inline constexpr double kProxyFloor = 1e-12;

/// Forecast errors log(h_hat) - log(proxy), pooled over all cells.
Score score(const Matrix& h_hat, const Matrix& proxy);

struct ScoreRow {
  std::string block;    // model family, e.g. "STARMAGARCH (AR(1) residuals)"
  std::string model;
  std::string weights;  // "---" when no weight matrix is involved
  std::string proxy;
  std::string height;
  double rmsfe = 0.0;
  double mafe = 0.0;
  Eigen::Index used = 0;
  Eigen::Index excluded = 0;
  bool best_rmsfe = false;
  bool best_mafe = false;
};

/// Marks, within every (block, proxy, height) group, the rows with the
/// smallest RMSFE and MAFE. Ties are all marked.
void mark_minima(std::vector<ScoreRow>& rows);

std::string score_rows_csv(const std::vector<ScoreRow>& rows);

/// Table-style text: one line per (block, model, weights, proxy) with the
/// heights side by side; minima starred.
std::string format_score_table(const std::vector<ScoreRow>& rows);

/// Static SVG of one station's forecast against a proxy.
std::string forecast_svg(const std::string& title, const Vector& h_hat, const Vector& proxy);

}  // namespace windvol
