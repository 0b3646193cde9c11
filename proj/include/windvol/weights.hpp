#pragma once

#include "windvol/core.hpp"
#include "windvol/ingest.hpp"

#include <Eigen/SparseCore>

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace windvol {

enum class WeightKind { knn, distance_band, directional, combined, custom };

std::string_view to_string(WeightKind k);
WeightKind parse_weight_kind(std::string_view text);

struct WeightEntry {
  Eigen::Index i;
  Eigen::Index j;
  double w;
};

/// Sparse spatial weight matrix. Every row sums to one or is identically
/// zero (an isolated node); there are no self-loops and no negative weights.
/// Immutable once built.
class WeightMatrix {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  using Params = std::vector<std::pair<std::string, double>>;

  WeightMatrix() = default;

  /// Row-standardises `raw` (zero rows stay zero) and validates the result.
  static WeightMatrix from_dense(const Matrix& raw, WeightKind kind = WeightKind::custom,
                                 Params params = {});
  static WeightMatrix from_entries(Eigen::Index n, const std::vector<WeightEntry>& raw,
                                   WeightKind kind = WeightKind::custom, Params params = {});
  static WeightMatrix zero(Eigen::Index n);

  Eigen::Index n() const { return sparse_.rows(); }
  WeightKind kind() const { return kind_; }
  const Params& params() const { return params_; }
  const Sparse& sparse() const { return sparse_; }
  Matrix dense() const { return Matrix(sparse_); }
  Vector row_sums() const;
  std::vector<WeightEntry> entries() const;
  /// Indices of rows without neighbours.
  std::vector<Eigen::Index> isolated() const;
  Eigen::Index nonzeros() const { return sparse_.nonZeros(); }
  double at(Eigen::Index i, Eigen::Index j) const { return sparse_.coeff(i, j); }

  Vector apply(const Vector& x) const { return sparse_ * x; }
  Matrix apply(const Matrix& x) const { return sparse_ * x; }

 private:
  Sparse sparse_;
  WeightKind kind_ = WeightKind::custom;
  Params params_;
};

/// Euclidean distances between projected coordinates, metres.
Matrix pairwise_distances(std::span<const Station> stations);

WeightMatrix knn_weights(std::span<const Station> stations, int k);
WeightMatrix distance_band_weights(std::span<const Station> stations, double radius_m);

struct DirectionalParams {
  std::vector<double> prevailing_dir;  // degrees clockwise from north, per station
  double half_angle = 45.0;            // degrees, in (0, 180]
  double cutoff = 100000.0;            // metres
  double decay = 50000.0;              // metres
};

/// Bearing from a to b in degrees clockwise from north, in [0, 360).
double bearing_deg(const Station& from, const Station& to);
/// Smallest absolute difference between two bearings, in [0, 180].
double angular_distance_deg(double a, double b);

WeightMatrix directional_weights(std::span<const Station> stations, const DirectionalParams& p);

/// Circular mean of bearings, mapped to [0, 360).
double prevailing_direction(std::span<const double> bearings_deg);

/// lambda * a + (1 - lambda) * b, re-standardised.
WeightMatrix combine_weights(const WeightMatrix& a, const WeightMatrix& b, double lambda);

// Serialisation: coordinate list CSV (i,j,w) plus a JSON sidecar with kind,
// parameters and isolated nodes.
void write_weights(const WeightMatrix& w, const std::filesystem::path& csv_path,
                   const std::filesystem::path& json_path, const std::string& provenance = {});
WeightMatrix read_weights(const std::filesystem::path& csv_path,
                          const std::filesystem::path& json_path);
/// Edge list with station ids and coordinates for external network plots.
void write_edge_list(const WeightMatrix& w, std::span<const Station> stations,
                     const std::filesystem::path& path, const std::string& provenance = {});

}  // namespace windvol
