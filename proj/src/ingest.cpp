#include "windvol/ingest.hpp"

#include "windvol/io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace windvol {

std::string_view to_string(Variable v) { return v == Variable::ws10 ? "ws10" : "ws100"; }

Variable parse_variable(std::string_view text) {
  if (text == "ws10") return Variable::ws10;
  if (text == "ws100") return Variable::ws100;
  throw Error(Errc::InvalidArgument, "unknown variable '" + std::string(text) + "'");
}

std::vector<std::string> Panel::station_ids() const {
  std::vector<std::string> ids;
  ids.reserve(stations.size());
  for (const auto& s : stations) ids.push_back(s.id);
  return ids;
}

Panel load_panel(const std::filesystem::path& path, Variable variable) {
  const auto table = io::read_csv(path);
  const auto c_date = table.column("date");
  const auto c_id = table.column("station_id");
  const auto c_lon = table.column("lon");
  const auto c_lat = table.column("lat");
  const auto c_val = table.column("value");
  const auto width = table.header.size();

  std::map<std::string, Station> stations;
  std::set<Date> dates;
  std::map<std::pair<Date, std::string>, double> cells;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != width)
      throw Error(Errc::UnparseableValue, "row " + std::to_string(r + 2) + " has " +
                                              std::to_string(row.size()) + " fields");
    const Date d = parse_date(row[c_date]);
    const std::string& id = row[c_id];
    const double lon = io::parse_double(row[c_lon]);
    const double lat = io::parse_double(row[c_lat]);
    const double value = io::parse_double(row[c_val]);
    if (!std::isfinite(value))
      throw Error(Errc::UnparseableValue, "non-finite value on " + format_date(d), id);

    auto [it, fresh] = stations.try_emplace(id, Station{id, lon, lat, 0.0, 0.0});
    if (!fresh && (it->second.lon != lon || it->second.lat != lat))
      throw Error(Errc::UnparseableValue, "inconsistent coordinates", id);
    dates.insert(d);
    if (!cells.emplace(std::make_pair(d, id), value).second)
      throw Error(Errc::DuplicateRow, "duplicate row for " + format_date(d), id);
  }
  if (stations.empty()) throw Error(Errc::EmptyPanel, "no rows in " + path.string());

  Panel panel;
  panel.variable = variable;
  panel.dates.assign(dates.begin(), dates.end());
  for (std::size_t t = 1; t < panel.dates.size(); ++t)
    if ((panel.dates[t] - panel.dates[t - 1]).count() != 1)
      throw Error(Errc::NonDailySpacing, "gap between " + format_date(panel.dates[t - 1]) +
                                             " and " + format_date(panel.dates[t]));

  for (auto& [id, st] : stations) {
    const auto p = project_coordinates(st.lon, st.lat);
    st.x = p.x;
    st.y = p.y;
    panel.stations.push_back(st);
  }

  const auto T = static_cast<Eigen::Index>(panel.dates.size());
  const auto N = static_cast<Eigen::Index>(panel.stations.size());
  panel.values.resize(T, N);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < N; ++i) {
      auto it = cells.find({panel.dates[t], panel.stations[i].id});
      if (it == cells.end())
        throw Error(Errc::MissingCell, "missing cell on " + format_date(panel.dates[t]),
                    panel.stations[i].id);
      panel.values(t, i) = it->second;
    }
  }
  return panel;
}

void write_panel(const Panel& panel, const std::filesystem::path& path, const std::string& provenance) {
  std::ostringstream out;
  if (!provenance.empty()) out << '#' << provenance << '\n';
  out << "date,station_id,lon,lat,value\n";
  for (Eigen::Index t = 0; t < panel.T(); ++t) {
    const auto date = format_date(panel.dates[t]);
    for (Eigen::Index i = 0; i < panel.N(); ++i) {
      const auto& s = panel.stations[i];
      out << date << ',' << s.id << ',' << io::format_double(s.lon) << ','
          << io::format_double(s.lat) << ',' << io::format_double(panel.values(t, i)) << '\n';
    }
  }
  io::write_text(path, out.str());
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error(Errc::EmptyPanel, "quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

StatsRow descriptive_stats(const Panel& panel) {
  if (panel.values.size() == 0) throw Error(Errc::EmptyPanel, "empty panel");
  std::vector<double> cells(panel.values.data(), panel.values.data() + panel.values.size());
  std::sort(cells.begin(), cells.end());

  StatsRow row;
  row.variable = panel.variable;
  row.T = panel.T();
  row.N = panel.N();
  row.median = quantile_sorted(cells, 0.5);
  row.iqr = quantile_sorted(cells, 0.75) - quantile_sorted(cells, 0.25);
  row.min = cells.front();
  row.max = cells.back();

  // sums over the sorted copy so the result does not depend on cell order
  double sum = 0.0;
  for (double v : cells) sum += v;
  row.mean = sum / static_cast<double>(cells.size());
  double ss = 0.0;
  for (double v : cells) ss += (v - row.mean) * (v - row.mean);
  row.sd = cells.size() > 1 ? std::sqrt(ss / static_cast<double>(cells.size() - 1)) : 0.0;
  return row;
}

Projected project_coordinates(double lon_deg, double lat_deg) {
  if (!std::isfinite(lon_deg) || !std::isfinite(lat_deg) || std::abs(lat_deg) >= 89.0 ||
      std::abs(lon_deg) > 180.0)
    throw Error(Errc::OutOfDomain, "coordinates outside the projection domain");

  constexpr double a = 6378137.0;
  constexpr double f = 1.0 / 298.257223563;
  constexpr double k0 = 0.9996;
  constexpr double false_easting = 500000.0;
  constexpr double lon0 = 9.0;

  const double n = f / (2.0 - f);
  const double n2 = n * n, n3 = n2 * n;
  const double A = a / (1.0 + n) * (1.0 + n2 / 4.0 + n2 * n2 / 64.0);
  const double alpha[3] = {n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0,
                           13.0 * n2 / 48.0 - 3.0 * n3 / 5.0, 61.0 * n3 / 240.0};

  const double phi = lat_deg * kPi / 180.0;
  const double dlam = (lon_deg - lon0) * kPi / 180.0;
  const double c = 2.0 * std::sqrt(n) / (1.0 + n);
  const double t = std::sinh(std::atanh(std::sin(phi)) - c * std::atanh(c * std::sin(phi)));
  const double xi = std::atan2(t, std::cos(dlam));
  const double eta = std::atanh(std::sin(dlam) / std::sqrt(1.0 + t * t));

  double east = eta, north = xi;
  for (int j = 1; j <= 3; ++j) {
    east += alpha[j - 1] * std::cos(2.0 * j * xi) * std::sinh(2.0 * j * eta);
    north += alpha[j - 1] * std::sin(2.0 * j * xi) * std::cosh(2.0 * j * eta);
  }
  return {false_easting + k0 * A * east, k0 * A * north};
}

std::pair<Panel, Panel> split(const Panel& panel, Date boundary) {
  if (panel.dates.empty() || boundary <= panel.dates.front() || boundary > panel.dates.back())
    throw Error(Errc::BoundaryOutsideRange, "split boundary " + format_date(boundary) +
                                                " is not strictly inside the date range");
  const auto cut = static_cast<Eigen::Index>(
      std::lower_bound(panel.dates.begin(), panel.dates.end(), boundary) - panel.dates.begin());
  Panel train, test;
  train.variable = test.variable = panel.variable;
  train.stations = test.stations = panel.stations;
  train.dates.assign(panel.dates.begin(), panel.dates.begin() + cut);
  test.dates.assign(panel.dates.begin() + cut, panel.dates.end());
  train.values = panel.values.topRows(cut);
  test.values = panel.values.bottomRows(panel.T() - cut);
  return {std::move(train), std::move(test)};
}

}  // namespace windvol
