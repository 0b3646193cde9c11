#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace windvol {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Error categories raised by the library. The CLI maps them onto exit codes.
enum class Errc {
  // data / contract
  MissingCell,
  DuplicateRow,
  NonDailySpacing,
  UnparseableValue,
  EmptyPanel,
  OutOfDomain,
  BoundaryOutsideRange,
  SeriesTooShort,
  NonFinite,
  KTooLarge,
  UndefinedDirection,
  DimensionMismatch,
  ShapeMismatch,
  TooFewObservations,
  TooShort,
  EmptyList,
  BadLambda,
  InvalidArgument,
  Io,
  MissingUpstream,
  DataUnavailable,
  ConfigInvalid,
  // numerical
  DegenerateVariance,
  DegenerateInput,
  ConstantSeries,
  ConstantValues,
  AllZeroWeights,
  AllZeroResiduals,
  AllExcluded,
  SingularRegression,
  SingularSystem,
  NonConvergence,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::string station = {})
      : std::runtime_error(station.empty() ? what : what + " [station " + station + "]"),
        code_(code),
        station_(std::move(station)) {}

  Errc code() const noexcept { return code_; }
  const std::string& station() const noexcept { return station_; }

 private:
  Errc code_;
  std::string station_;
};

/// ln det(a) for a square matrix with positive determinant, via partial-pivot
/// LU. Throws SingularSystem when the determinant is not positive or the
/// matrix is numerically singular.
double log_det_positive(const Matrix& a);

/// True for error codes that describe a numerical failure rather than bad input.
bool is_numerical(Errc code);

// Calendar days. Parsing and formatting use ISO yyyy-mm-dd.
using Date = std::chrono::sys_days;

Date parse_date(std::string_view text);
std::string format_date(Date d);
/// Day of year in 1..366.
int day_of_year(Date d);

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace windvol
