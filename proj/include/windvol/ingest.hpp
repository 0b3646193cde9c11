#pragma once

#include "windvol/core.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace windvol {

enum class Variable { ws10, ws100 };

std::string_view to_string(Variable v);
Variable parse_variable(std::string_view text);

struct Station {
  std::string id;
  double lon = 0.0;  // degrees
  double lat = 0.0;  // degrees
  double x = 0.0;    // projected easting, metres
  double y = 0.0;    // projected northing, metres
};

/// T x N grid of daily values. Rows follow `dates`, columns follow `stations`
/// (sorted by id).
struct Panel {
  Matrix values;
  std::vector<Date> dates;
  std::vector<Station> stations;
  Variable variable = Variable::ws10;

  Eigen::Index T() const { return values.rows(); }
  Eigen::Index N() const { return values.cols(); }
  std::vector<std::string> station_ids() const;
};

/// Pooled descriptive statistics in the column order of the published table.
struct StatsRow {
  Variable variable = Variable::ws10;
  Eigen::Index T = 0;
  Eigen::Index N = 0;
  double median = 0.0;
  double mean = 0.0;
  double iqr = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Reads `date,station_id,lon,lat,value` rows. Missing cells, duplicates and
/// calendar gaps are load errors; nothing is imputed.
Panel load_panel(const std::filesystem::path& path, Variable variable);
void write_panel(const Panel& panel, const std::filesystem::path& path, const std::string& provenance = {});

StatsRow descriptive_stats(const Panel& panel);

/// Type-7 (linear interpolation) sample quantile of already sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);

struct Projected {
  double x;
  double y;
};

/// Transverse Mercator, zone 32N (central meridian 9E, k0 = 0.9996, WGS84,
/// false easting 500 km). Krueger series to third order in the third
/// flattening, accurate to well under a millimetre across a zone.
Projected project_coordinates(double lon_deg, double lat_deg);

/// Splits on `boundary`: train holds days strictly before it.
std::pair<Panel, Panel> split(const Panel& panel, Date boundary);

}  // namespace windvol
