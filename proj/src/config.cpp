#include "windvol/io.hpp"
#include "windvol/pipeline.hpp"
#include "windvol/toml.hpp"

#include <algorithm>
#include <set>

namespace windvol {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void invalid(const std::string& msg) { throw Error(Errc::ConfigInvalid, msg); }

void check_keys(const json& table, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!table.is_object()) invalid("'" + where + "' must be a table");
  for (const auto& [key, value] : table.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      invalid("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_or(const json& table, const char* key, T fallback, const std::string& where) {
  if (!table.contains(key)) return fallback;
  try {
    return table.at(key).get<T>();
  } catch (const json::exception&) {
    invalid("'" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

double number(const json& table, const char* key, double fallback, const std::string& where) {
  if (!table.contains(key)) return fallback;
  const auto& v = table.at(key);
  if (!v.is_number()) invalid("'" + std::string(key) + "' in " + where + " must be a number");
  return v.get<double>();
}

std::vector<std::string> strings(const json& table, const char* key, std::vector<std::string> fallback,
                                 const std::string& where) {
  if (!table.contains(key)) return fallback;
  const auto& v = table.at(key);
  if (!v.is_array()) invalid("'" + std::string(key) + "' in " + where + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) invalid("'" + std::string(key) + "' in " + where + " must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

std::string weight_file_stem(const WeightSpec& spec, Variable v) {
  if (spec.kind == WeightKind::directional || spec.kind == WeightKind::combined)
    return spec.name + "_" + std::string(to_string(v));
  return spec.name;
}

std::vector<Variable> ExperimentConfig::variables() const {
  std::vector<Variable> out;
  for (const auto& [v, p] : data) out.push_back(v);
  return out;
}

bool ExperimentConfig::wants(const std::string& model) const {
  return std::find(mean_models.begin(), mean_models.end(), model) != mean_models.end() ||
         std::find(vol_models.begin(), vol_models.end(), model) != vol_models.end();
}

ExperimentConfig config_from_json(const json& root, const fs::path& base_dir, const ConfigOverrides& overrides) {
  check_keys(root, "the top level", {"seed", "output", "threads", "data", "preprocess", "weights", "models", "evaluate"});
  ExperimentConfig cfg;
  json canon;

  const auto seed = get_or<long long>(root, "seed", 1, "the top level");
  if (seed < 0) invalid("seed must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.output = resolve(base_dir, get_or<std::string>(root, "output", "out", "the top level"));
  cfg.threads = get_or<int>(root, "threads", 1, "the top level");

  if (!root.contains("data")) invalid("missing [data] table");
  const auto& data = root.at("data");
  check_keys(data, "[data]", {"ws10", "ws100", "split", "synthetic"});
  for (auto v : {Variable::ws10, Variable::ws100}) {
    const auto key = std::string(to_string(v));
    if (!data.contains(key)) continue;
    const auto rel = get_or<std::string>(data, key.c_str(), "", "[data]");
    cfg.data[v] = resolve(base_dir, rel);
    canon["data"][key] = rel;
  }
  if (cfg.data.empty()) invalid("[data] must name at least one of ws10, ws100");
  if (!data.contains("split")) invalid("[data] needs a split date");
  try {
    cfg.split = parse_date(get_or<std::string>(data, "split", "", "[data]"));
  } catch (const Error&) {
    invalid("[data].split is not a yyyy-mm-dd date");
  }
  cfg.synthetic = get_or<bool>(data, "synthetic", false, "[data]");
  canon["data"]["split"] = format_date(cfg.split);
  canon["data"]["synthetic"] = cfg.synthetic;

  if (root.contains("preprocess")) {
    const auto& pp = root.at("preprocess");
    check_keys(pp, "[preprocess]", {"period", "robustness_iterations", "inner_iterations"});
    cfg.period = get_or<int>(pp, "period", cfg.period, "[preprocess]");
    cfg.robustness_iterations = get_or<int>(pp, "robustness_iterations", cfg.robustness_iterations, "[preprocess]");
    cfg.inner_iterations = get_or<int>(pp, "inner_iterations", cfg.inner_iterations, "[preprocess]");
  }
  if (cfg.period < 2) invalid("period must be at least 2");
  if (cfg.robustness_iterations < 0 || cfg.inner_iterations < 1) invalid("STL iteration counts out of range");
  canon["preprocess"] = {{"period", cfg.period},
                         {"robustness_iterations", cfg.robustness_iterations},
                         {"inner_iterations", cfg.inner_iterations}};

  std::set<std::string> names;
  canon["weights"] = json::array();
  if (root.contains("weights")) {
    const auto& ws = root.at("weights");
    if (!ws.is_array()) invalid("weights must be an array of tables ([[weights]])");
    for (const auto& w : ws) {
      check_keys(w, "[[weights]]", {"name", "kind", "k", "radius_km", "cutoff_km", "half_angle", "decay_km",
                                    "directions", "a", "b", "lambda"});
      WeightSpec spec;
      spec.name = get_or<std::string>(w, "name", "", "[[weights]]");
      if (spec.name.empty() || spec.name.find_first_of("/\\ ,") != std::string::npos)
        invalid("weight names must be non-empty and contain no spaces, commas or slashes");
      if (!names.insert(spec.name).second) invalid("duplicate weight name '" + spec.name + "'");
      try {
        spec.kind = parse_weight_kind(get_or<std::string>(w, "kind", "", "[[weights]]"));
      } catch (const Error&) {
        invalid("weight '" + spec.name + "' has an unknown kind");
      }
      json c = {{"name", spec.name}, {"kind", std::string(to_string(spec.kind))}};
      switch (spec.kind) {
        case WeightKind::knn:
          spec.k = get_or<int>(w, "k", spec.k, "[[weights]]");
          if (spec.k < 1) invalid("k must be at least 1");
          c["k"] = spec.k;
          break;
        case WeightKind::distance_band:
          spec.radius_m = 1000.0 * number(w, "radius_km", spec.radius_m / 1000.0, "[[weights]]");
          if (!(spec.radius_m > 0.0)) invalid("radius_km must be positive");
          c["radius_m"] = spec.radius_m;
          break;
        case WeightKind::directional: {
          spec.cutoff_m = 1000.0 * number(w, "cutoff_km", spec.cutoff_m / 1000.0, "[[weights]]");
          spec.half_angle = number(w, "half_angle", spec.half_angle, "[[weights]]");
          spec.decay_m = 1000.0 * number(w, "decay_km", spec.decay_m / 1000.0, "[[weights]]");
          spec.lambda = number(w, "lambda", spec.lambda, "[[weights]]");
          if (!(spec.cutoff_m > 0.0) || !(spec.decay_m > 0.0) || !(spec.half_angle > 0.0 && spec.half_angle <= 180.0))
            invalid("directional parameters out of range for '" + spec.name + "'");
          if (!w.contains("directions") || !w.at("directions").is_object())
            invalid("directional weight '" + spec.name + "' needs a directions table {ws10 = ..., ws100 = ...}");
          for (const auto& [key, val] : w.at("directions").items()) {
            Variable v;
            try {
              v = parse_variable(key);
            } catch (const Error&) {
              invalid("unknown variable '" + key + "' in directions");
            }
            if (!val.is_string()) invalid("direction paths must be strings");
            spec.directions[v] = resolve(base_dir, val.get<std::string>());
            c["directions"][key] = val.get<std::string>();
          }
          for (const auto& [v, p] : cfg.data)
            if (!spec.directions.count(v))
              invalid("directional weight '" + spec.name + "' has no direction file for " + std::string(to_string(v)));
          c["cutoff_m"] = spec.cutoff_m;
          c["half_angle"] = spec.half_angle;
          c["decay_m"] = spec.decay_m;
          c["lambda"] = spec.lambda;
          break;
        }
        case WeightKind::combined:
          spec.a = get_or<std::string>(w, "a", "", "[[weights]]");
          spec.b = get_or<std::string>(w, "b", "", "[[weights]]");
          spec.lambda = number(w, "lambda", spec.lambda, "[[weights]]");
          if (!names.count(spec.a) || !names.count(spec.b))
            invalid("combined weight '" + spec.name + "' must refer to weights defined before it");
          c["a"] = spec.a;
          c["b"] = spec.b;
          c["lambda"] = spec.lambda;
          break;
        case WeightKind::custom:
          invalid("custom weights cannot be declared in a config");
      }
      if (spec.lambda < 0.0 || spec.lambda > 1.0) invalid("lambda must lie in [0, 1]");
      cfg.weights.push_back(spec);
      canon["weights"].push_back(c);
    }
  }

  if (root.contains("models")) {
    const auto& m = root.at("models");
    check_keys(m, "[models]", {"mean", "volatility", "station_omega", "starts", "sdpd_intercept",
                               "mv_lagged_spatial", "variance_init"});
    cfg.mean_models = strings(m, "mean", cfg.mean_models, "[models]");
    cfg.vol_models = strings(m, "volatility", cfg.vol_models, "[models]");
    cfg.station_omega = get_or<bool>(m, "station_omega", cfg.station_omega, "[models]");
    cfg.starts = get_or<int>(m, "starts", cfg.starts, "[models]");
    cfg.sdpd_intercept = get_or<bool>(m, "sdpd_intercept", cfg.sdpd_intercept, "[models]");
    cfg.mv_lagged_spatial = get_or<bool>(m, "mv_lagged_spatial", cfg.mv_lagged_spatial, "[models]");
    const auto init = get_or<std::string>(m, "variance_init", "sample_variance", "[models]");
    if (init == "sample_variance") {
      cfg.variance_init = VarianceInit::sample_variance;
    } else if (init == "unconditional") {
      cfg.variance_init = VarianceInit::unconditional;
    } else {
      invalid("variance_init must be sample_variance or unconditional");
    }
  }
  for (const auto& m : cfg.mean_models)
    if (m != "ar1" && m != "sdpd") invalid("unknown mean model '" + m + "'");
  for (const auto& m : cfg.vol_models)
    if (m != "uni_garch" && m != "uni_egarch" && m != "starmagarch" && m != "mv_logarch")
      invalid("unknown volatility model '" + m + "'");
  if (cfg.starts < 1) invalid("starts must be at least 1");
  if (cfg.wants("mv_logarch") && cfg.data.size() != 2) invalid("mv_logarch needs both ws10 and ws100 data");
  canon["models"] = {{"mean", cfg.mean_models},
                     {"volatility", cfg.vol_models},
                     {"station_omega", cfg.station_omega},
                     {"starts", cfg.starts},
                     {"sdpd_intercept", cfg.sdpd_intercept},
                     {"mv_lagged_spatial", cfg.mv_lagged_spatial},
                     {"variance_init", cfg.variance_init == VarianceInit::sample_variance ? "sample_variance"
                                                                                        : "unconditional"}};

  if (root.contains("evaluate")) {
    const auto& e = root.at("evaluate");
    check_keys(e, "[evaluate]", {"proxies", "ewma_lambda", "ewma_init", "ljung_box_lags", "arch_lm_lags", "svg_stations"});
    if (e.contains("proxies")) {
      cfg.proxies.clear();
      for (const auto& p : strings(e, "proxies", {}, "[evaluate]")) {
        try {
          cfg.proxies.push_back(parse_proxy(p));
        } catch (const Error&) {
          invalid("unknown proxy '" + p + "'");
        }
      }
    }
    cfg.ewma_lambda = number(e, "ewma_lambda", cfg.ewma_lambda, "[evaluate]");
    const auto init = get_or<std::string>(e, "ewma_init", "first", "[evaluate]");
    if (init != "first" && init != "train_variance") invalid("ewma_init must be first or train_variance");
    cfg.ewma_train_init = init == "train_variance";
    cfg.ljung_box_lags = get_or<int>(e, "ljung_box_lags", cfg.ljung_box_lags, "[evaluate]");
    cfg.arch_lm_lags = get_or<int>(e, "arch_lm_lags", cfg.arch_lm_lags, "[evaluate]");
    cfg.svg_stations = get_or<int>(e, "svg_stations", cfg.svg_stations, "[evaluate]");
  }
  if (!(cfg.ewma_lambda > 0.0 && cfg.ewma_lambda < 1.0)) invalid("ewma_lambda must lie in (0, 1)");
  if (cfg.ljung_box_lags < 1 || cfg.arch_lm_lags < 1) invalid("test lag counts must be positive");
  if (cfg.proxies.empty()) invalid("at least one proxy is required");
  std::vector<std::string> proxy_names;
  for (auto p : cfg.proxies) proxy_names.emplace_back(to_string(p));
  canon["evaluate"] = {{"proxies", proxy_names},
                       {"ewma_lambda", cfg.ewma_lambda},
                       {"ewma_init", cfg.ewma_train_init ? "train_variance" : "first"},
                       {"ljung_box_lags", cfg.ljung_box_lags},
                       {"arch_lm_lags", cfg.arch_lm_lags},
                       {"svg_stations", cfg.svg_stations}};

  if (overrides.output) cfg.output = *overrides.output;
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.threads) cfg.threads = *overrides.threads;
  if (cfg.threads < 1) invalid("threads must be at least 1");
  canon["seed"] = cfg.seed;

  cfg.canonical = canon;
  cfg.hash = io::fnv1a_hex(canon.dump());
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, const ConfigOverrides& overrides) {
  std::string text;
  try {
    text = io::read_text(path);
  } catch (const Error&) {
    invalid("cannot read config file " + path.string());
  }
  return config_from_json(parse_toml(text), path.parent_path(), overrides);
}

}  // namespace windvol
