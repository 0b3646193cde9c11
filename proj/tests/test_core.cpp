#include "windvol/core.hpp"
#include "windvol/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace windvol;

TEST_CASE("dates round-trip through text") {
  for (const char* s : {"2016-01-01", "2020-02-29", "2021-12-31", "1999-07-15"}) CHECK(format_date(parse_date(s)) == s);
  CHECK_THROWS_AS(parse_date("2021-02-29"), Error);
  CHECK_THROWS_AS(parse_date("2021/01/01"), Error);
  CHECK_THROWS_AS(parse_date("21-01-01"), Error);
}

TEST_CASE("day of year counts from one and handles leap years") {
  CHECK(day_of_year(parse_date("2021-01-01")) == 1);
  CHECK(day_of_year(parse_date("2021-12-31")) == 365);
  CHECK(day_of_year(parse_date("2020-12-31")) == 366);
  CHECK(day_of_year(parse_date("2020-03-01")) == 61);
  CHECK(day_of_year(parse_date("2021-03-01")) == 60);
}

TEST_CASE("FNV-1a 64-bit reference vectors") {
  CHECK(io::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(io::fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(io::fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("shortest decimal formatting round-trips exactly") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = z(rng);
    CHECK(io::parse_double(io::format_double(v)) == v);
  }
  CHECK(io::format_double(std::nan("")) == "nan");
  CHECK(io::format_fixed(1.23456, 2) == "1.23");
}

TEST_CASE("number parsing rejects junk") {
  CHECK(io::parse_double(" 2.5 ") == 2.5);
  CHECK_THROWS_AS(io::parse_double("2.5x"), Error);
  CHECK_THROWS_AS(io::parse_double(""), Error);
  CHECK(io::parse_long("42") == 42);
  CHECK_THROWS_AS(io::parse_long("4.2"), Error);
}

TEST_CASE("CSV reader keeps comment lines apart and honours quotes") {
  const auto dir = std::filesystem::temp_directory_path() / "windvol_test_core";
  const auto path = dir / "t.csv";
  io::write_text(path, "#provenance abc\r\na,b,c\r\n1,\"x,y\",3\n\n# trailing\n4,5,6\n");
  const auto t = io::read_csv(path);
  REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x,y");
  CHECK(t.rows[1][2] == "6");
  CHECK(t.comments.size() == 2);
  CHECK(t.column("c") == 2);
  CHECK_THROWS_AS(t.column("zz"), Error);
  CHECK(io::read_text(path).substr(0, 11) == "#provenance");
  std::filesystem::remove_all(dir);
}

TEST_CASE("log determinant matches the direct determinant") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int n : {1, 2, 5, 12}) {
    Matrix a = Matrix::Identity(n, n) * 3.0;
    for (auto& v : a.reshaped()) v += 0.3 * z(rng);
    const double det = a.determinant();
    if (det > 0.0) CHECK(log_det_positive(a) == doctest::Approx(std::log(det)).epsilon(1e-12));
  }
  Matrix neg = Matrix::Identity(2, 2);
  neg(0, 0) = -1.0;
  CHECK_THROWS_AS(log_det_positive(neg), Error);
  CHECK_THROWS_AS(log_det_positive(Matrix::Zero(3, 3)), Error);
}

TEST_CASE("error classes") {
  CHECK(is_numerical(Errc::SingularSystem));
  CHECK(is_numerical(Errc::NonConvergence));
  CHECK_FALSE(is_numerical(Errc::MissingCell));
  CHECK_FALSE(is_numerical(Errc::ConfigInvalid));
  const Error e(Errc::MissingCell, "gap", "S1");
  CHECK(e.station() == "S1");
  CHECK(std::string(e.what()).find("S1") != std::string::npos);
  CHECK(to_string(Errc::MissingUpstream) == "MissingUpstream");
}
