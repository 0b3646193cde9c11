#include "windvol/evaluate.hpp"

#include "windvol/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

namespace windvol {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string_view to_string(ProxyKind k) {
  switch (k) {
    case ProxyKind::rv: return "rv";
    case ProxyKind::ewma: return "ewma";
    case ProxyKind::rv5_sq: return "rv5_sq";
    case ProxyKind::rv5_abs: return "rv5_abs";
  }
  return "?";
}

ProxyKind parse_proxy(std::string_view name) {
  for (auto k : {ProxyKind::rv, ProxyKind::ewma, ProxyKind::rv5_sq, ProxyKind::rv5_abs})
    if (to_string(k) == name) return k;
  throw Error(Errc::InvalidArgument, "unknown proxy '" + std::string(name) + "'");
}

ProxySeries rv(const Matrix& eps) { return {ProxyKind::rv, 0.0, eps.cwiseAbs2()}; }

ProxySeries ewma(const Matrix& eps, double lambda, const std::optional<Vector>& init) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw Error(Errc::BadLambda, "EWMA smoothing parameter must lie in (0, 1)");
  ProxySeries out{ProxyKind::ewma, lambda, Matrix(eps.rows(), eps.cols())};
  if (eps.rows() == 0) return out;
  if (init && init->size() != eps.cols()) throw Error(Errc::ShapeMismatch, "EWMA start values");
  if (init)
    out.values.row(0) = init->transpose();
  else
    out.values.row(0) = eps.row(0).cwiseAbs2();
  for (Eigen::Index t = 1; t < eps.rows(); ++t)
    out.values.row(t) = lambda * out.values.row(t - 1) + (1.0 - lambda) * eps.row(t).cwiseAbs2();
  return out;
}

ProxySeries rv5(const Matrix& eps, Rv5Mode mode) {
  constexpr Eigen::Index kWindow = 5;
  if (eps.rows() < kWindow) throw Error(Errc::TooShort, "five-day proxy needs at least five rows");
  ProxySeries out{mode == Rv5Mode::sq ? ProxyKind::rv5_sq : ProxyKind::rv5_abs, 0.0,
                  Matrix::Constant(eps.rows(), eps.cols(), kNaN)};
  for (Eigen::Index t = kWindow - 1; t < eps.rows(); ++t) {
    const auto block = eps.middleRows(t - kWindow + 1, kWindow);
    if (mode == Rv5Mode::sq) {
      out.values.row(t) = block.cwiseAbs2().colwise().mean();
    } else {
      out.values.row(t) = block.cwiseAbs().colwise().mean().cwiseAbs2();
    }
  }
  return out;
}

ProxySeries make_proxy(ProxyKind kind, const Matrix& eps, double lambda) {
  switch (kind) {
    case ProxyKind::rv: return rv(eps);
    case ProxyKind::ewma: return ewma(eps, lambda);
    case ProxyKind::rv5_sq: return rv5(eps, Rv5Mode::sq);
    case ProxyKind::rv5_abs: return rv5(eps, Rv5Mode::abs);
  }
  throw Error(Errc::InvalidArgument, "unknown proxy");
}

Score score(const Matrix& h_hat, const Matrix& proxy) {
  if (h_hat.rows() != proxy.rows() || h_hat.cols() != proxy.cols())
    throw Error(Errc::ShapeMismatch, "forecast and proxy shapes differ");
  Score s;
  double sq = 0.0, ab = 0.0;
  for (Eigen::Index j = 0; j < h_hat.cols(); ++j) {
    for (Eigen::Index t = 0; t < h_hat.rows(); ++t) {
      const double p = proxy(t, j);
      if (std::isnan(p)) continue;
      if (p <= kProxyFloor) {
        ++s.excluded;
        continue;
      }
      const double h = h_hat(t, j);
      if (!(h > 0.0) || !std::isfinite(h)) throw Error(Errc::InvalidArgument, "forecast variances must be positive");
      const double err = std::log(h) - std::log(p);
      sq += err * err;
      ab += std::abs(err);
      ++s.used;
    }
  }
  if (s.used == 0) throw Error(Errc::AllExcluded, "no proxy cell is usable for scoring");
  s.rmsfe = std::sqrt(sq / static_cast<double>(s.used));
  s.mafe = ab / static_cast<double>(s.used);
  return s;
}

void mark_minima(std::vector<ScoreRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, std::pair<double, double>> best;
  for (const auto& r : rows) {
    auto [it, fresh] = best.try_emplace(Key{r.block, r.proxy, r.height}, r.rmsfe, r.mafe);
    if (!fresh) {
      it->second.first = std::min(it->second.first, r.rmsfe);
      it->second.second = std::min(it->second.second, r.mafe);
    }
  }
  for (auto& r : rows) {
    const auto& b = best.at(Key{r.block, r.proxy, r.height});
    r.best_rmsfe = r.rmsfe == b.first;
    r.best_mafe = r.mafe == b.second;
  }
}

std::string score_rows_csv(const std::vector<ScoreRow>& rows) {
  std::ostringstream os;
  os << "block,model,weights,proxy,height,rmsfe,mafe,used,excluded,best_rmsfe,best_mafe\n";
  for (const auto& r : rows) {
    os << '"' << r.block << "\"," << r.model << ',' << r.weights << ',' << r.proxy << ',' << r.height << ','
       << io::format_double(r.rmsfe) << ',' << io::format_double(r.mafe) << ',' << r.used << ',' << r.excluded
       << ',' << (r.best_rmsfe ? 1 : 0) << ',' << (r.best_mafe ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string format_score_table(const std::vector<ScoreRow>& rows) {
  std::vector<std::string> heights;
  for (const auto& r : rows)
    if (std::find(heights.begin(), heights.end(), r.height) == heights.end()) heights.push_back(r.height);

  std::ostringstream os;
  auto cell = [](double v, bool best) {
    std::string s = io::format_fixed(v, 4) + (best ? "*" : " ");
    return std::string(s.size() < 10 ? 10 - s.size() : 0, ' ') + s;
  };
  os << "Model                     Matrix       Proxy   ";
  for (const auto& h : heights) os << "  " << h << " RMSFE   " << h << " MAFE ";
  os << '\n';
  std::string block;
  std::vector<std::tuple<std::string, std::string, std::string, std::string>> seen;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.block, r.model, r.weights, r.proxy);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    if (r.block != block) {
      block = r.block;
      os << "-- " << block << '\n';
    }
    std::string line = r.model;
    line.resize(26, ' ');
    std::string w = r.weights;
    w.resize(13, ' ');
    std::string p = r.proxy;
    p.resize(8, ' ');
    os << line << w << p;
    for (const auto& h : heights) {
      auto it = std::find_if(rows.begin(), rows.end(), [&](const ScoreRow& x) {
        return x.block == r.block && x.model == r.model && x.weights == r.weights && x.proxy == r.proxy &&
               x.height == h;
      });
      if (it == rows.end()) {
        os << "          -          -";
      } else {
        os << ' ' << cell(it->rmsfe, it->best_rmsfe) << ' ' << cell(it->mafe, it->best_mafe);
      }
    }
    os << '\n';
  }
  os << "(* lowest within the block for that proxy and height)\n";
  return os.str();
}

std::string forecast_svg(const std::string& title, const Vector& h_hat, const Vector& proxy) {
  constexpr double kW = 720, kH = 300, kPad = 40;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto take = [&](const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (v[i] > kProxyFloor && std::isfinite(v[i])) {
        lo = std::min(lo, std::log(v[i]));
        hi = std::max(hi, std::log(v[i]));
      }
  };
  take(h_hat);
  take(proxy);
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const auto n = std::max<Eigen::Index>(2, std::max(h_hat.size(), proxy.size()));
  auto path = [&](const Vector& v) {
    std::ostringstream os;
    bool pen = false;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!(v[i] > kProxyFloor) || !std::isfinite(v[i])) {
        pen = false;
        continue;
      }
      const double x = kPad + (kW - 2 * kPad) * static_cast<double>(i) / static_cast<double>(n - 1);
      const double y = kH - kPad - (kH - 2 * kPad) * (std::log(v[i]) - lo) / (hi - lo);
      os << (pen ? 'L' : 'M') << io::format_fixed(x, 1) << ',' << io::format_fixed(y, 1) << ' ';
      pen = true;
    }
    return os.str();
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kPad << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" << title
     << " (log scale)</text>\n"
     << "<path d=\"" << path(proxy) << "\" fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"1\"/>\n"
     << "<path d=\"" << path(h_hat) << "\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>\n"
     << "<text x=\"" << kW - 200 << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#c0392b\">forecast</text>\n"
     << "<text x=\"" << kW - 120 << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#888888\">proxy</text>\n"
     << "</svg>\n";
  return os.str();
}

}  // namespace windvol
