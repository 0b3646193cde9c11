#include "windvol/weights.hpp"

#include "windvol/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace windvol {

std::string_view to_string(WeightKind k) {
  switch (k) {
    case WeightKind::knn: return "knn";
    case WeightKind::distance_band: return "distance_band";
    case WeightKind::directional: return "directional";
    case WeightKind::combined: return "combined";
    case WeightKind::custom: return "custom";
  }
  return "custom";
}

WeightKind parse_weight_kind(std::string_view text) {
  for (auto k : {WeightKind::knn, WeightKind::distance_band, WeightKind::directional,
                 WeightKind::combined, WeightKind::custom})
    if (to_string(k) == text) return k;
  throw Error(Errc::InvalidArgument, "unknown weight kind '" + std::string(text) + "'");
}

WeightMatrix WeightMatrix::from_entries(Eigen::Index n, const std::vector<WeightEntry>& raw,
                                        WeightKind kind, Params params) {
  Vector sums = Vector::Zero(n);
  for (const auto& e : raw) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
      throw Error(Errc::DimensionMismatch, "weight entry index out of range");
    if (!(e.w >= 0.0) || !std::isfinite(e.w))
      throw Error(Errc::InvalidArgument, "weights must be finite and non-negative");
    if (e.i != e.j) sums[e.i] += e.w;
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(raw.size());
  for (const auto& e : raw)
    if (e.i != e.j && e.w > 0.0 && sums[e.i] > 0.0) trip.emplace_back(e.i, e.j, e.w / sums[e.i]);

  WeightMatrix out;
  out.sparse_.resize(n, n);
  out.sparse_.setFromTriplets(trip.begin(), trip.end());
  out.sparse_.makeCompressed();
  out.kind_ = kind;
  out.params_ = std::move(params);
  return out;
}

WeightMatrix WeightMatrix::from_dense(const Matrix& raw, WeightKind kind, Params params) {
  if (raw.rows() != raw.cols()) throw Error(Errc::DimensionMismatch, "weight matrix not square");
  std::vector<WeightEntry> entries;
  for (Eigen::Index i = 0; i < raw.rows(); ++i)
    for (Eigen::Index j = 0; j < raw.cols(); ++j)
      if (raw(i, j) != 0.0) entries.push_back({i, j, raw(i, j)});
  return from_entries(raw.rows(), entries, kind, std::move(params));
}

WeightMatrix WeightMatrix::zero(Eigen::Index n) { return from_entries(n, {}); }

Vector WeightMatrix::row_sums() const { return sparse_ * Vector::Ones(n()); }

std::vector<WeightEntry> WeightMatrix::entries() const {
  std::vector<WeightEntry> out;
  out.reserve(static_cast<std::size_t>(sparse_.nonZeros()));
  for (Eigen::Index i = 0; i < sparse_.outerSize(); ++i)
    for (Sparse::InnerIterator it(sparse_, i); it; ++it) out.push_back({it.row(), it.col(), it.value()});
  return out;
}

std::vector<Eigen::Index> WeightMatrix::isolated() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < sparse_.outerSize(); ++i)
    if (!Sparse::InnerIterator(sparse_, i)) out.push_back(i);
  return out;
}

Matrix pairwise_distances(std::span<const Station> s) {
  const auto n = static_cast<Eigen::Index>(s.size());
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      d(i, j) = d(j, i) = std::hypot(s[i].x - s[j].x, s[i].y - s[j].y);
  return d;
}

WeightMatrix knn_weights(std::span<const Station> s, int k) {
  const auto n = static_cast<Eigen::Index>(s.size());
  if (k < 1 || k >= n) throw Error(Errc::KTooLarge, "k must satisfy 1 <= k < N");
  const Matrix d = pairwise_distances(s);
  std::vector<WeightEntry> entries;
  std::vector<Eigen::Index> order;
  for (Eigen::Index i = 0; i < n; ++i) {
    order.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      if (d(i, a) != d(i, b)) return d(i, a) < d(i, b);
      return s[a].id < s[b].id;
    });
    for (int m = 0; m < k; ++m) entries.push_back({i, order[m], 1.0});
  }
  return WeightMatrix::from_entries(n, entries, WeightKind::knn, {{"k", k}});
}

WeightMatrix distance_band_weights(std::span<const Station> s, double radius) {
  if (!(radius > 0.0)) throw Error(Errc::InvalidArgument, "distance band radius must be positive");
  const auto n = static_cast<Eigen::Index>(s.size());
  const Matrix d = pairwise_distances(s);
  std::vector<WeightEntry> entries;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && d(i, j) > 0.0 && d(i, j) <= radius) entries.push_back({i, j, 1.0});
  return WeightMatrix::from_entries(n, entries, WeightKind::distance_band, {{"radius_m", radius}});
}

double bearing_deg(const Station& from, const Station& to) {
  double b = std::atan2(to.x - from.x, to.y - from.y) * 180.0 / kPi;
  if (b < 0.0) b += 360.0;
  return b >= 360.0 ? b - 360.0 : b;
}

double angular_distance_deg(double a, double b) {
  double diff = std::fmod(std::abs(a - b), 360.0);
  return diff > 180.0 ? 360.0 - diff : diff;
}

WeightMatrix directional_weights(std::span<const Station> s, const DirectionalParams& p) {
  const auto n = static_cast<Eigen::Index>(s.size());
  if (!(p.half_angle > 0.0 && p.half_angle <= 180.0))
    throw Error(Errc::InvalidArgument, "half angle must lie in (0, 180]");
  if (!(p.decay > 0.0) || !(p.cutoff > 0.0))
    throw Error(Errc::InvalidArgument, "decay and cutoff must be positive");
  if (static_cast<Eigen::Index>(p.prevailing_dir.size()) != n)
    throw Error(Errc::DimensionMismatch, "one prevailing direction per station required");

  const Matrix d = pairwise_distances(s);
  std::vector<WeightEntry> entries;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j || d(i, j) <= 0.0 || d(i, j) > p.cutoff) continue;
      const double dtheta = angular_distance_deg(bearing_deg(s[i], s[j]), p.prevailing_dir[i]);
      if (dtheta > p.half_angle) continue;
      const double c = std::max(0.0, std::cos(dtheta * kPi / 180.0));
      const double w = std::exp(-d(i, j) / p.decay) * c;
      if (w > 0.0) entries.push_back({i, j, w});
    }
  }
  return WeightMatrix::from_entries(
      n, entries, WeightKind::directional,
      {{"cutoff_m", p.cutoff}, {"half_angle_deg", p.half_angle}, {"decay_m", p.decay}});
}

double prevailing_direction(std::span<const double> bearings) {
  if (bearings.empty()) throw Error(Errc::UndefinedDirection, "no direction observations");
  double sx = 0.0, cx = 0.0;
  for (double b : bearings) {
    sx += std::sin(b * kPi / 180.0);
    cx += std::cos(b * kPi / 180.0);
  }
  sx /= static_cast<double>(bearings.size());
  cx /= static_cast<double>(bearings.size());
  if (std::hypot(sx, cx) < 1e-12)
    throw Error(Errc::UndefinedDirection, "resultant direction vector vanishes");
  double deg = std::atan2(sx, cx) * 180.0 / kPi;
  if (deg < 0.0) deg += 360.0;
  // -1e-15 wraps to just below 360; report it as north
  return 360.0 - deg < 1e-9 ? 0.0 : deg;
}

WeightMatrix combine_weights(const WeightMatrix& a, const WeightMatrix& b, double lambda) {
  if (a.n() != b.n()) throw Error(Errc::DimensionMismatch, "weight matrices differ in size");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw Error(Errc::InvalidArgument, "mixing weight must lie in [0, 1]");
  const WeightMatrix::Sparse mix = lambda * a.sparse() + (1.0 - lambda) * b.sparse();
  std::vector<WeightEntry> entries;
  for (Eigen::Index i = 0; i < mix.outerSize(); ++i)
    for (WeightMatrix::Sparse::InnerIterator it(mix, i); it; ++it)
      entries.push_back({it.row(), it.col(), it.value()});
  return WeightMatrix::from_entries(a.n(), entries, WeightKind::combined, {{"lambda", lambda}});
}

void write_weights(const WeightMatrix& w, const std::filesystem::path& csv_path,
                   const std::filesystem::path& json_path, const std::string& provenance) {
  std::ostringstream out;
  if (!provenance.empty()) out << '#' << provenance << '\n';
  out << "i,j,w\n";
  for (const auto& e : w.entries()) out << e.i << ',' << e.j << ',' << io::format_double(e.w) << '\n';
  io::write_text(csv_path, out.str());

  nlohmann::ordered_json meta;
  meta["kind"] = std::string(to_string(w.kind()));
  meta["n"] = w.n();
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [k, v] : w.params()) params[k] = v;
  meta["parameters"] = params;
  meta["isolated"] = w.isolated();
  meta["nonzeros"] = w.nonzeros();
  if (!provenance.empty()) meta["provenance"] = provenance;
  io::write_text(json_path, meta.dump(2) + "\n");
}

WeightMatrix read_weights(const std::filesystem::path& csv_path,
                          const std::filesystem::path& json_path) {
  const auto meta = nlohmann::json::parse(io::read_text(json_path));
  const auto n = meta.at("n").get<Eigen::Index>();
  WeightMatrix::Params params;
  for (const auto& [k, v] : meta.at("parameters").items()) params.emplace_back(k, v.get<double>());
  const auto table = io::read_csv(csv_path);
  const auto ci = table.column("i"), cj = table.column("j"), cw = table.column("w");
  std::vector<WeightEntry> entries;
  for (const auto& row : table.rows)
    entries.push_back({io::parse_long(row[ci]), io::parse_long(row[cj]), io::parse_double(row[cw])});
  return WeightMatrix::from_entries(n, entries, parse_weight_kind(meta.at("kind").get<std::string>()),
                                    std::move(params));
}

void write_edge_list(const WeightMatrix& w, std::span<const Station> s,
                     const std::filesystem::path& path, const std::string& provenance) {
  if (static_cast<Eigen::Index>(s.size()) != w.n())
    throw Error(Errc::DimensionMismatch, "station list does not match the weight matrix");
  std::ostringstream out;
  if (!provenance.empty()) out << '#' << provenance << '\n';
  out << "from_id,to_id,weight,from_lon,from_lat,to_lon,to_lat\n";
  for (const auto& e : w.entries()) {
    const auto& a = s[static_cast<std::size_t>(e.i)];
    const auto& b = s[static_cast<std::size_t>(e.j)];
    out << a.id << ',' << b.id << ',' << io::format_double(e.w) << ',' << io::format_double(a.lon)
        << ',' << io::format_double(a.lat) << ',' << io::format_double(b.lon) << ','
        << io::format_double(b.lat) << '\n';
  }
  io::write_text(path, out.str());
}

}  // namespace windvol
