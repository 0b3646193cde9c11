#include "windvol/core.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <cstdio>

namespace windvol {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MissingCell: return "MissingCell";
    case Errc::DuplicateRow: return "DuplicateRow";
    case Errc::NonDailySpacing: return "NonDailySpacing";
    case Errc::UnparseableValue: return "UnparseableValue";
    case Errc::EmptyPanel: return "EmptyPanel";
    case Errc::OutOfDomain: return "OutOfDomain";
    case Errc::BoundaryOutsideRange: return "BoundaryOutsideRange";
    case Errc::SeriesTooShort: return "SeriesTooShort";
    case Errc::NonFinite: return "NonFinite";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::UndefinedDirection: return "UndefinedDirection";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::TooFewObservations: return "TooFewObservations";
    case Errc::TooShort: return "TooShort";
    case Errc::EmptyList: return "EmptyList";
    case Errc::BadLambda: return "BadLambda";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    case Errc::MissingUpstream: return "MissingUpstream";
    case Errc::DataUnavailable: return "DataUnavailable";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::ConstantSeries: return "ConstantSeries";
    case Errc::ConstantValues: return "ConstantValues";
    case Errc::AllZeroWeights: return "AllZeroWeights";
    case Errc::AllZeroResiduals: return "AllZeroResiduals";
    case Errc::AllExcluded: return "AllExcluded";
    case Errc::SingularRegression: return "SingularRegression";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::NonConvergence: return "NonConvergence";
  }
  return "Unknown";
}

bool is_numerical(Errc code) {
  switch (code) {
    case Errc::DegenerateVariance:
    case Errc::DegenerateInput:
    case Errc::ConstantSeries:
    case Errc::ConstantValues:
    case Errc::AllZeroWeights:
    case Errc::AllZeroResiduals:
    case Errc::AllExcluded:
    case Errc::SingularRegression:
    case Errc::SingularSystem:
    case Errc::NonConvergence:
      return true;
    default:
      return false;
  }
}

Date parse_date(std::string_view text) {
  auto bad = [&] { return Error(Errc::UnparseableValue, "bad date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  int y = 0;
  unsigned m = 0, d = 0;
  auto parse = [&](std::string_view s, auto& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || p != s.data() + s.size()) throw bad();
  };
  parse(text.substr(0, 4), y);
  parse(text.substr(5, 2), m);
  parse(text.substr(8, 2), d);
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw bad();
  return Date{ymd};
}

std::string format_date(Date d) {
  std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int day_of_year(Date d) {
  std::chrono::year_month_day ymd{d};
  Date jan1{ymd.year() / std::chrono::January / 1};
  return static_cast<int>((d - jan1).count()) + 1;
}

double log_det_positive(const Matrix& a) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const Matrix& m = lu.matrixLU();
  double log_det = 0.0;
  double sign = lu.permutationP().determinant();
  double max_pivot = 0.0;
  double min_pivot = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double u = m(i, i);
    max_pivot = std::max(max_pivot, std::abs(u));
    min_pivot = std::min(min_pivot, std::abs(u));
    if (u < 0.0) sign = -sign;
    log_det += std::log(std::abs(u));
  }
  if (!(sign > 0.0) || !(min_pivot > 1e-12 * max_pivot) || !std::isfinite(log_det))
    throw Error(Errc::SingularSystem, "system matrix is singular or has a non-positive determinant");
  return log_det;
}

}  // namespace windvol
