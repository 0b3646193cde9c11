#include "windvol/weights.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace windvol;

namespace {

std::vector<Station> line_stations(const std::vector<double>& xs) {
  std::vector<Station> s;
  for (std::size_t i = 0; i < xs.size(); ++i) s.push_back({"S" + std::to_string(i), 0, 0, xs[i], 0.0});
  return s;
}

std::vector<Station> random_stations(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 100000.0);
  std::vector<Station> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = {"S" + std::to_string(i), 0, 0, u(rng), u(rng)};
  return s;
}

void check_row_standardised(const WeightMatrix& w) {
  const Vector rs = w.row_sums();
  for (Eigen::Index i = 0; i < rs.size(); ++i) {
    if (rs[i] != 0.0) CHECK(rs[i] == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (const auto& e : w.entries()) {
    CHECK(e.w > 0.0);
    CHECK(e.i != e.j);
  }
}

}  // namespace

TEST_CASE("row standardisation and isolated rows") {
  Matrix raw(3, 3);
  raw << 0, 2, 6, 0, 0, 0, 1, 1, 0;
  const auto w = WeightMatrix::from_dense(raw);
  CHECK(w.at(0, 1) == doctest::Approx(0.25));
  CHECK(w.at(0, 2) == doctest::Approx(0.75));
  CHECK(w.at(2, 0) == doctest::Approx(0.5));
  CHECK(w.isolated() == std::vector<Eigen::Index>{1});
  CHECK(w.row_sums()[1] == 0.0);
  Matrix neg = raw;
  neg(0, 1) = -1.0;
  CHECK_THROWS_AS(WeightMatrix::from_dense(neg), Error);
  CHECK_THROWS_AS(WeightMatrix::from_dense(Matrix::Ones(2, 3)), Error);
}

TEST_CASE("k nearest neighbours on a line, ties broken by station id") {
  const auto s = line_stations({0, 1000, 2000, 4000});
  const auto w = knn_weights(s, 1);
  // Station 1 is equidistant from 0 and 2; the smaller id wins.
  CHECK(w.at(1, 0) == 1.0);
  CHECK(w.at(1, 2) == 0.0);
  CHECK(w.at(3, 2) == 1.0);
  const auto w2 = knn_weights(s, 2);
  CHECK(w2.at(0, 1) == 0.5);
  CHECK(w2.at(0, 2) == 0.5);
  CHECK_THROWS_AS(knn_weights(s, 4), Error);
  CHECK_THROWS_AS(knn_weights(s, 0), Error);
}

TEST_CASE("distance band includes the boundary and leaves far stations isolated") {
  const auto s = line_stations({0, 1000, 2000, 10000});
  const auto w = distance_band_weights(s, 1000.0);
  CHECK(w.at(0, 1) == 1.0);
  CHECK(w.at(1, 0) == doctest::Approx(0.5));
  CHECK(w.at(1, 2) == doctest::Approx(0.5));
  CHECK(w.at(0, 2) == 0.0);
  CHECK(w.isolated() == std::vector<Eigen::Index>{3});
  CHECK_THROWS_AS(distance_band_weights(s, 0.0), Error);
}

TEST_CASE("bearings and angular distances") {
  const Station o{"o", 0, 0, 0, 0};
  CHECK(bearing_deg(o, {"n", 0, 0, 0, 10}) == doctest::Approx(0.0));
  CHECK(bearing_deg(o, {"e", 0, 0, 10, 0}) == doctest::Approx(90.0));
  CHECK(bearing_deg(o, {"s", 0, 0, 0, -10}) == doctest::Approx(180.0));
  CHECK(bearing_deg(o, {"w", 0, 0, -10, 0}) == doctest::Approx(270.0));
  CHECK(angular_distance_deg(350.0, 10.0) == doctest::Approx(20.0));
  CHECK(angular_distance_deg(10.0, 190.0) == doctest::Approx(180.0));
  CHECK(angular_distance_deg(720.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("circular mean of bearings") {
  const std::vector<double> a{350.0, 10.0};
  CHECK(prevailing_direction(a) == doctest::Approx(0.0));
  const std::vector<double> b{80.0, 100.0, 90.0};
  CHECK(prevailing_direction(b) == doctest::Approx(90.0));
  const std::vector<double> c{270.0, 300.0};
  CHECK(prevailing_direction(c) == doctest::Approx(285.0));
  const std::vector<double> opposite{0.0, 180.0};
  CHECK_THROWS_AS(prevailing_direction(opposite), Error);
  CHECK_THROWS_AS(prevailing_direction(std::vector<double>{}), Error);
}

TEST_CASE("directional weights follow the cone, cutoff and decay") {
  // Origin with neighbours north (1 km), north-east (1 km), south (1 km), far north (200 km).
  const double r = 1000.0 / std::sqrt(2.0);
  const std::vector<Station> s{{"a", 0, 0, 0, 0}, {"b", 0, 0, 0, 1000}, {"c", 0, 0, r, r}, {"d", 0, 0, 0, -1000},
                               {"e", 0, 0, 0, 200000}};
  DirectionalParams p;
  p.prevailing_dir = {0, 0, 0, 0, 0};
  p.half_angle = 60.0;
  p.cutoff = 100000.0;
  p.decay = 50000.0;
  const auto w = directional_weights(s, p);
  CHECK(w.at(0, 3) == 0.0);  // outside the cone
  CHECK(w.at(0, 4) == 0.0);  // beyond the cutoff
  const double wb = std::exp(-1000.0 / 50000.0);
  const double wc = std::exp(-1000.0 / 50000.0) * std::cos(kPi / 4.0);
  CHECK(w.at(0, 1) == doctest::Approx(wb / (wb + wc)));
  CHECK(w.at(0, 2) == doctest::Approx(wc / (wb + wc)));
  p.prevailing_dir.pop_back();
  CHECK_THROWS_AS(directional_weights(s, p), Error);
}

TEST_CASE("weight invariants on random networks") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 25; ++rep) {
    const auto n = 4 + static_cast<std::size_t>(rng() % 30);
    const auto s = random_stations(n, rng);
    const int k = 1 + static_cast<int>(rng() % (n - 1));
    const auto knn = knn_weights(s, k);
    check_row_standardised(knn);
    CHECK(knn.nonzeros() == static_cast<Eigen::Index>(n) * k);
    check_row_standardised(distance_band_weights(s, 30000.0));
    DirectionalParams p;
    for (std::size_t i = 0; i < n; ++i) p.prevailing_dir.push_back(360.0 * u(rng));
    p.half_angle = 20.0 + 100.0 * u(rng);
    const auto dir = directional_weights(s, p);
    check_row_standardised(dir);
    const auto mix = combine_weights(knn, dir, u(rng));
    check_row_standardised(mix);
    CHECK(mix.isolated().empty());
  }
}

TEST_CASE("combination is the re-standardised convex mix") {
  Matrix a(2, 2), b(2, 2);
  a << 0, 1, 1, 0;
  b << 0, 1, 0, 0;
  const auto wa = WeightMatrix::from_dense(a), wb = WeightMatrix::from_dense(b);
  const auto m = combine_weights(wa, wb, 0.3);
  CHECK(m.at(0, 1) == doctest::Approx(1.0));
  CHECK(m.at(1, 0) == doctest::Approx(1.0));  // 0.3 re-standardised
  CHECK(combine_weights(wa, wb, 1.0).dense() == wa.dense());
  CHECK_THROWS_AS(combine_weights(wa, wb, 1.5), Error);
  CHECK_THROWS_AS(combine_weights(wa, WeightMatrix::zero(3), 0.5), Error);
}

TEST_CASE("serialisation round-trip keeps values, kind and isolated rows") {
  std::mt19937_64 rng(8);
  const auto s = random_stations(12, rng);
  const auto w = distance_band_weights(s, 25000.0);
  const auto dir = std::filesystem::temp_directory_path() / "windvol_test_weights";
  write_weights(w, dir / "w.csv", dir / "w.json", "prov");
  const auto back = read_weights(dir / "w.csv", dir / "w.json");
  CHECK(back.dense() == w.dense());
  CHECK(back.kind() == WeightKind::distance_band);
  CHECK(back.isolated() == w.isolated());
  write_edge_list(w, s, dir / "edges.csv");
  CHECK(std::filesystem::exists(dir / "edges.csv"));
  std::filesystem::remove_all(dir);
}
