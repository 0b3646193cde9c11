#pragma once

#include "windvol/core.hpp"
#include "windvol/evaluate.hpp"
#include "windvol/ingest.hpp"
#include "windvol/unigarch.hpp"
#include "windvol/weights.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace windvol {

inline constexpr const char* kToolVersion = "0.1.0";

struct WeightSpec {
  std::string name;
  WeightKind kind = WeightKind::distance_band;
  int k = 5;
  double radius_m = 55000.0;
  double cutoff_m = 100000.0;
  double half_angle = 45.0;
  double decay_m = 50000.0;
  /// Directional: per-variable direction files (station_id, direction[, date]).
  std::map<Variable, std::filesystem::path> directions;
  /// Combined: the two matrices mixed as lambda * a + (1 - lambda) * b.
  std::string a, b;
  double lambda = 0.5;
};

/// Matrix name used for `spec` and variable `v`. Directional matrices are
/// built per height because prevailing directions differ.
std::string weight_file_stem(const WeightSpec& spec, Variable v);

struct ExperimentConfig {
  std::map<Variable, std::filesystem::path> data;
  Date split{};
  bool synthetic = false;

  int period = 365;
  int robustness_iterations = 1;
  int inner_iterations = 2;

  std::vector<WeightSpec> weights;

  std::vector<std::string> mean_models{"ar1", "sdpd"};
  std::vector<std::string> vol_models{"uni_garch", "uni_egarch", "starmagarch", "mv_logarch"};
  bool station_omega = false;
  int starts = 3;
  bool sdpd_intercept = true;
  bool mv_lagged_spatial = false;
  VarianceInit variance_init = VarianceInit::sample_variance;

  std::vector<ProxyKind> proxies{ProxyKind::rv, ProxyKind::ewma};
  double ewma_lambda = kRiskMetricsLambda;
  /// Start the EWMA at the training-sample variance instead of eps_1^2.
  bool ewma_train_init = false;
  int ljung_box_lags = 10;
  int arch_lm_lags = 5;
  int svg_stations = 2;

  std::filesystem::path output = "out";
  std::uint64_t seed = 1;
  int threads = 1;

  /// Canonical form of everything that affects results (output directory
  /// and thread count excluded) and its hash.
  nlohmann::json canonical;
  std::string hash;

  std::vector<Variable> variables() const;
  bool wants(const std::string& model) const;
};

struct ConfigOverrides {
  std::optional<std::filesystem::path> output;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

/// Reads a TOML experiment config. Relative data paths resolve against the
/// config file's directory. Invalid content raises ConfigInvalid.
ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});
ExperimentConfig config_from_json(const nlohmann::json& root, const std::filesystem::path& base_dir,
                                  const ConfigOverrides& overrides = {});

enum class Stage { ingest, preprocess, weights, diagnose, fit_uni, fit_sdpd, fit_st, fit_mv, forecast, evaluate, report };
std::string_view to_string(Stage s);
const std::vector<Stage>& all_stages();

/// Runs one stage, reading upstream artifacts from the output directory
/// (MissingUpstream when absent) and writing its own.
void run_stage(Stage stage, const ExperimentConfig& cfg);
void run_all(const ExperimentConfig& cfg);

/// Full run followed by the comparison against published reference values.
/// Raises DataUnavailable when the configured data files are missing.
void reproduce(const ExperimentConfig& cfg);

/// Writes a small synthetic network (5 stations, 2016-2021, both heights and
/// direction files) to `dir`.
void write_synthetic_dataset(const std::filesystem::path& dir, std::uint64_t seed, int stations = 5);

/// Provenance line (without the leading '#') written at the top of every
/// artifact: tool version, config hash and upstream file hashes.
std::string provenance_line(const ExperimentConfig& cfg, const std::vector<std::filesystem::path>& upstream = {});

}  // namespace windvol
