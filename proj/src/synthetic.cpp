#include "windvol/io.hpp"
#include "windvol/pipeline.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace windvol {

void write_synthetic_dataset(const std::filesystem::path& dir, std::uint64_t seed, int stations) {
  if (stations < 3) throw Error(Errc::InvalidArgument, "the synthetic network needs at least three stations");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const auto n = static_cast<std::size_t>(stations);
  // Stations scattered around Milan.
  std::vector<Station> st(n);
  for (std::size_t i = 0; i < n; ++i) {
    st[i].id = "S" + std::to_string(100 + i);
    st[i].lon = io::parse_double(io::format_fixed(9.0 + 0.35 * u(rng), 4));
    st[i].lat = io::parse_double(io::format_fixed(45.35 + 0.25 * u(rng), 4));
  }
  std::vector<double> level(n), prevailing(n);
  for (std::size_t i = 0; i < n; ++i) {
    level[i] = 0.2 + 0.15 * z(rng);
    prevailing[i] = 230.0 + 30.0 * z(rng);
  }

  const Date first = parse_date("2016-01-01");
  const Date last = parse_date("2021-12-31");
  // Spatially correlated AR(1) anomalies with GARCH-type innovation variance.
  std::vector<double> x(n, 0.0), h(n, 0.05), eta(n, 0.0);
  std::ostringstream ws10, ws100, d10, d100;
  for (auto* os : {&ws10, &ws100}) *os << "date,station_id,lon,lat,value\n";
  for (auto* os : {&d10, &d100}) *os << "date,station_id,direction\n";
  for (Date d = first; d <= last; d += std::chrono::days(1)) {
    const double common = z(rng);
    double mean_x = 0.0;
    for (double xi : x) mean_x += xi / static_cast<double>(n);
    const double season = 0.15 * std::cos(2.0 * kPi * (day_of_year(d) - 60) / 365.25);
    const auto date = format_date(d);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = 0.005 + 0.10 * eta[i] * eta[i] + 0.85 * h[i];
      eta[i] = std::sqrt(h[i]) * (0.6 * common + 0.8 * z(rng));
      x[i] = 0.45 * x[i] + 0.25 * mean_x + eta[i];
      const double v10 = std::exp(level[i] + season + x[i]);
      const double v100 = std::exp(level[i] + 0.55 + 0.8 * season + 0.9 * x[i] + 0.08 * z(rng));
      const auto prefix = date + "," + st[i].id + ",";
      const auto coords = io::format_fixed(st[i].lon, 4) + "," + io::format_fixed(st[i].lat, 4) + ",";
      ws10 << prefix << coords << io::format_fixed(v10, 4) << '\n';
      ws100 << prefix << coords << io::format_fixed(v100, 4) << '\n';
      const auto bearing = [&](double centre) {
        double b = std::fmod(centre + 45.0 * z(rng), 360.0);
        return io::format_fixed(b < 0.0 ? b + 360.0 : b, 1);
      };
      d10 << prefix << bearing(prevailing[i]) << '\n';
      d100 << prefix << bearing(prevailing[i] + 10.0) << '\n';
    }
  }
  io::write_text(dir / "ws10.csv", ws10.str());
  io::write_text(dir / "ws100.csv", ws100.str());
  io::write_text(dir / "dir_ws10.csv", d10.str());
  io::write_text(dir / "dir_ws100.csv", d100.str());
}

}  // namespace windvol
