#pragma once
// Internal helpers shared by the pipeline translation units.

#include "windvol/io.hpp"
#include "windvol/pipeline.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace windvol::detail {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline fs::path artifact(const ExperimentConfig& cfg, const std::string& rel) { return cfg.output / rel; }

/// Throws MissingUpstream naming the stage that produces `path`.
inline void need(const fs::path& path, Stage producer) {
  if (!fs::exists(path))
    throw Error(Errc::MissingUpstream,
                path.string() + " not found; run the '" + std::string(to_string(producer)) + "' stage first");
}

inline void write_artifact(const fs::path& path, const std::string& provenance, const std::string& body) {
  io::write_text(path, "#" + provenance + "\n" + body);
}

inline void write_json(const fs::path& path, const std::string& provenance, json j) {
  j["provenance"] = provenance;
  io::write_text(path, j.dump(2) + "\n");
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw Error(Errc::UnparseableValue, "cannot parse " + path.string() + ": " + e.what());
  }
}

inline json to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(to_json(v[i]));
  return out;
}

inline double number_of(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline Vector vector_of(const json& j) {
  Vector out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) out[static_cast<Eigen::Index>(i)] = number_of(j[i]);
  return out;
}

/// Number of leading dates strictly before the split; BoundaryOutsideRange
/// unless both sides are non-empty.
inline Eigen::Index rows_before(const std::vector<Date>& dates, Date split) {
  Eigen::Index n = 0;
  while (n < static_cast<Eigen::Index>(dates.size()) && dates[static_cast<std::size_t>(n)] < split) ++n;
  if (n == 0 || n == static_cast<Eigen::Index>(dates.size()))
    throw Error(Errc::BoundaryOutsideRange, "split date " + format_date(split) + " leaves an empty sample");
  return n;
}

/// Per-column mean of squares.
inline Vector mean_square(const Matrix& m) {
  return m.cwiseAbs2().colwise().mean().transpose();
}

std::string weight_stem_for_mv(const WeightSpec& spec);
const WeightSpec* first_of_kind(const ExperimentConfig& cfg, WeightKind kind);

}  // namespace windvol::detail
