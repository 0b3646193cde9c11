#include "artifacts.hpp"

#include "windvol/diagnostics.hpp"
#include "windvol/mvlogarch.hpp"
#include "windvol/parallel.hpp"
#include "windvol/preprocess.hpp"
#include "windvol/sdpd.hpp"
#include "windvol/stgarch.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>

namespace windvol {
namespace detail {

std::string weight_stem_for_mv(const WeightSpec& spec) {
  if (spec.kind == WeightKind::directional || spec.kind == WeightKind::combined) return spec.name + "_mix";
  return spec.name;
}

const WeightSpec* first_of_kind(const ExperimentConfig& cfg, WeightKind kind) {
  for (const auto& s : cfg.weights)
    if (s.kind == kind) return &s;
  return nullptr;
}

}  // namespace detail

using namespace detail;

namespace {

std::string var_name(Variable v) { return std::string(to_string(v)); }

// ---- artifact locations -------------------------------------------------

fs::path panel_path(const ExperimentConfig& c, Variable v) { return artifact(c, "ingest/panel_" + var_name(v) + ".csv"); }
fs::path stations_path(const ExperimentConfig& c) { return artifact(c, "ingest/stations.csv"); }
fs::path ar1_path(const ExperimentConfig& c, Variable v) {
  return artifact(c, "preprocess/residuals_ar1_" + var_name(v) + ".csv");
}
fs::path remainder_path(const ExperimentConfig& c, Variable v) {
  return artifact(c, "preprocess/remainder_" + var_name(v) + ".csv");
}
fs::path weight_csv(const ExperimentConfig& c, const std::string& stem) { return artifact(c, "weights/" + stem + ".csv"); }
fs::path weight_json(const ExperimentConfig& c, const std::string& stem) { return artifact(c, "weights/" + stem + ".json"); }
fs::path sdpd_resid_path(const ExperimentConfig& c, const std::string& name, Variable v) {
  return artifact(c, "fit/residuals_sdpd_" + name + "_" + var_name(v) + ".csv");
}
fs::path uni_json_path(const ExperimentConfig& c, Variable v) { return artifact(c, "fit/uni_" + var_name(v) + ".json"); }
fs::path st_json_path(const ExperimentConfig& c, const std::string& src, const std::string& name, Variable v) {
  return artifact(c, "fit/st_" + src + "_" + name + "_" + var_name(v) + ".json");
}
fs::path mv_json_path(const ExperimentConfig& c, const std::string& name) { return artifact(c, "fit/mv_" + name + ".json"); }

std::string rel(const ExperimentConfig& c, const fs::path& p) { return p.lexically_relative(c.output).generic_string(); }

std::string prov(const ExperimentConfig& c, const std::vector<fs::path>& upstream = {}) {
  return provenance_line(c, upstream);
}

WeightMatrix load_weights(const ExperimentConfig& c, const std::string& stem) {
  need(weight_csv(c, stem), Stage::weights);
  need(weight_json(c, stem), Stage::weights);
  return read_weights(weight_csv(c, stem), weight_json(c, stem));
}

LoadedResiduals load_residuals(const fs::path& p, Stage producer) {
  need(p, producer);
  return read_residuals(p);
}

std::vector<Station> load_stations(const ExperimentConfig& c) {
  need(stations_path(c), Stage::ingest);
  const auto t = io::read_csv(stations_path(c));
  std::vector<Station> out;
  for (const auto& r : t.rows)
    out.push_back({r[t.column("station_id")], io::parse_double(r[t.column("lon")]), io::parse_double(r[t.column("lat")]),
                   io::parse_double(r[t.column("x")]), io::parse_double(r[t.column("y")])});
  return out;
}

/// Re-raises an error from a per-station computation with the station id attached.
template <class F>
void tagged(const std::string& station, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (!e.station().empty()) throw;
    throw Error(e.code(), e.what(), station);
  }
}

std::vector<std::string> mean_sources(const ExperimentConfig& c) {
  std::vector<std::string> out;
  for (const char* s : {"ar1", "sdpd"})
    if (c.wants(s)) out.emplace_back(s);
  return out;
}

fs::path residual_source_path(const ExperimentConfig& c, const std::string& src, const WeightSpec& spec, Variable v) {
  return src == "ar1" ? ar1_path(c, v) : sdpd_resid_path(c, spec.name, v);
}

Stage residual_source_stage(const std::string& src) { return src == "ar1" ? Stage::preprocess : Stage::fit_sdpd; }

// ---- JSON (de)serialisation of fits ------------------------------------

json uni_to_json(const UniFit& f) {
  return {{"model", std::string(to_string(f.model))},
          {"names", f.param_names()},
          {"params", to_json(f.params)},
          {"std_errors", to_json(f.std_errors)},
          {"loglik", to_json(f.loglik)},
          {"aic", to_json(f.aic)},
          {"bic", to_json(f.bic)},
          {"h0", to_json(f.h0)},
          {"persistence", to_json(f.persistence())},
          {"converged", f.converged}};
}

UniFit uni_from_json(const json& j) {
  UniFit f;
  f.model = j.at("model").get<std::string>() == "garch" ? UniModel::garch : UniModel::egarch;
  f.params = vector_of(j.at("params"));
  f.h0 = number_of(j.at("h0"));
  return f;
}

json mat2_to_json(const Eigen::Matrix2d& m) { return json{{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}; }
Eigen::Matrix2d mat2_from_json(const json& j) {
  Eigen::Matrix2d m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = number_of(j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)));
  return m;
}

json system_to_json(const MvFit& f) {
  return {{"intercept", {f.params.intercept[0], f.params.intercept[1]}},
          {"psi", mat2_to_json(f.params.psi)},
          {"pi", mat2_to_json(f.params.pi)},
          {"intercept_se", {to_json(f.intercept_se[0]), to_json(f.intercept_se[1])}},
          {"psi_se", json{{to_json(f.psi_se(0, 0)), to_json(f.psi_se(0, 1))}, {to_json(f.psi_se(1, 0)), to_json(f.psi_se(1, 1))}}},
          {"pi_se", json{{to_json(f.pi_se(0, 0)), to_json(f.pi_se(0, 1))}, {to_json(f.pi_se(1, 0)), to_json(f.pi_se(1, 1))}}},
          {"sigma2", {f.sigma2[0], f.sigma2[1]}},
          {"loglik", to_json(f.loglik)},
          {"spectral_radius", f.spectral_radius},
          {"lagged_spatial", f.lagged_spatial},
          {"converged", f.converged}};
}

MvSystem system_from_json(const json& j) {
  MvSystem s;
  s.intercept = {number_of(j.at("intercept")[0]), number_of(j.at("intercept")[1])};
  s.psi = mat2_from_json(j.at("psi"));
  s.pi = mat2_from_json(j.at("pi"));
  return s;
}

// ---- stages --------------------------------------------------------------

void stage_ingest(const ExperimentConfig& cfg) {
  std::map<Variable, Panel> panels;
  for (const auto& [v, path] : cfg.data) {
    if (!fs::exists(path))
      throw Error(Errc::DataUnavailable,
                  "data file " + path.string() + " not found. Export the daily " + var_name(v) +
                      " series as CSV with columns date,station_id,lon,lat,value and point [data]." + var_name(v) +
                      " at it");
    panels.emplace(v, load_panel(path, v));
  }
  const Panel& ref = panels.begin()->second;
  for (const auto& [v, p] : panels) {
    if (p.station_ids() != ref.station_ids() || p.dates != ref.dates)
      throw Error(Errc::ShapeMismatch, "ws10 and ws100 panels cover different stations or dates");
  }
  const auto provenance = prov(cfg);
  std::ostringstream stats, stations, split_csv;
  stats << "variable,T,N,median,mean,iqr,sd,min,max\n";
  split_csv << "variable,boundary,train_rows,test_rows\n";
  for (const auto& [v, p] : panels) {
    const auto [train, test] = split(p, cfg.split);
    write_panel(p, panel_path(cfg, v), provenance);
    const auto s = descriptive_stats(p);
    stats << var_name(v) << ',' << s.T << ',' << s.N << ',' << io::format_double(s.median) << ','
          << io::format_double(s.mean) << ',' << io::format_double(s.iqr) << ',' << io::format_double(s.sd) << ','
          << io::format_double(s.min) << ',' << io::format_double(s.max) << '\n';
    split_csv << var_name(v) << ',' << format_date(cfg.split) << ',' << train.T() << ',' << test.T() << '\n';
  }
  stations << "station_id,lon,lat,x,y\n";
  for (const auto& s : ref.stations)
    stations << s.id << ',' << io::format_double(s.lon) << ',' << io::format_double(s.lat) << ','
             << io::format_double(s.x) << ',' << io::format_double(s.y) << '\n';
  write_artifact(artifact(cfg, "ingest/stats.csv"), provenance, stats.str());
  write_artifact(artifact(cfg, "ingest/split.csv"), provenance, split_csv.str());
  write_artifact(stations_path(cfg), provenance, stations.str());
}

void stage_preprocess(const ExperimentConfig& cfg) {
  for (auto v : cfg.variables()) {
    need(panel_path(cfg, v), Stage::ingest);
    const auto panel = load_panel(panel_path(cfg, v), v);
    PreprocessOptions opts;
    opts.period = cfg.period;
    opts.stl.robustness_iterations = cfg.robustness_iterations;
    opts.stl.inner_iterations = cfg.inner_iterations;
    opts.fit_rows = rows_before(panel.dates, cfg.split);
    opts.threads = cfg.threads;
    const auto rp = preprocess_panel(panel, opts);
    const auto provenance = prov(cfg, {panel_path(cfg, v)});
    write_residuals(rp.residuals, rp.dates, rp.station_ids, ar1_path(cfg, v), provenance);
    write_residuals(rp.remainder, panel.dates, rp.station_ids, remainder_path(cfg, v), provenance);
    std::ostringstream os;
    os << "station_id,phi\n";
    for (std::size_t i = 0; i < rp.station_ids.size(); ++i)
      os << rp.station_ids[i] << ',' << io::format_double(rp.phi[static_cast<Eigen::Index>(i)]) << '\n';
    write_artifact(artifact(cfg, "preprocess/ar1_" + var_name(v) + ".csv"), provenance, os.str());
  }
}

std::vector<double> prevailing_directions(const fs::path& path, const std::vector<Station>& stations) {
  if (!fs::exists(path)) throw Error(Errc::DataUnavailable, "direction file " + path.string() + " not found");
  const auto t = io::read_csv(path);
  const auto c_id = t.column("station_id");
  const auto c_dir = t.column("direction");
  std::map<std::string, std::vector<double>> bearings;
  for (const auto& r : t.rows) bearings[r[c_id]].push_back(io::parse_double(r[c_dir]));
  std::vector<double> out;
  for (const auto& s : stations) {
    auto it = bearings.find(s.id);
    if (it == bearings.end()) throw Error(Errc::MissingCell, "no wind direction observations", s.id);
    double d = 0.0;
    tagged(s.id, [&] { d = prevailing_direction(it->second); });
    out.push_back(d);
  }
  return out;
}

void stage_weights(const ExperimentConfig& cfg) {
  const auto stations = load_stations(cfg);
  std::map<std::string, WeightMatrix> built;
  std::map<std::string, std::vector<fs::path>> inputs;
  const auto vars = cfg.variables();
  for (const auto& spec : cfg.weights) {
    for (auto v : vars) {
      const auto stem = weight_file_stem(spec, v);
      if (built.count(stem)) continue;
      switch (spec.kind) {
        case WeightKind::knn: built.emplace(stem, knn_weights(stations, spec.k)); break;
        case WeightKind::distance_band: built.emplace(stem, distance_band_weights(stations, spec.radius_m)); break;
        case WeightKind::directional: {
          DirectionalParams p;
          p.prevailing_dir = prevailing_directions(spec.directions.at(v), stations);
          p.half_angle = spec.half_angle;
          p.cutoff = spec.cutoff_m;
          p.decay = spec.decay_m;
          built.emplace(stem, directional_weights(stations, p));
          break;
        }
        case WeightKind::combined: {
          const auto find = [&](const std::string& name) -> const WeightMatrix& {
            for (const auto& s : cfg.weights)
              if (s.name == name) return built.at(weight_file_stem(s, v));
            throw Error(Errc::ConfigInvalid, "unknown weight '" + name + "'");
          };
          built.emplace(stem, combine_weights(find(spec.a), find(spec.b), spec.lambda));
          break;
        }
        case WeightKind::custom: throw Error(Errc::ConfigInvalid, "custom weights are not supported in configs");
      }
    }
    if (vars.size() == 2 && (spec.kind == WeightKind::directional || spec.kind == WeightKind::combined)) {
      const double mix = spec.kind == WeightKind::directional ? spec.lambda : 0.5;
      built.emplace(weight_stem_for_mv(spec), combine_weights(built.at(weight_file_stem(spec, Variable::ws10)),
                                                              built.at(weight_file_stem(spec, Variable::ws100)), mix));
    }
  }
  const auto provenance = prov(cfg, {stations_path(cfg)});
  for (const auto& [stem, w] : built) {
    write_weights(w, weight_csv(cfg, stem), weight_json(cfg, stem), provenance);
    write_edge_list(w, stations, artifact(cfg, "weights/" + stem + "_edges.csv"), provenance);
  }
}

void stage_diagnose(const ExperimentConfig& cfg) {
  std::ostringstream summary, moran;
  summary << "variable,test,value\n";
  moran << "weights,variable,proxy,i,expected,variance,z,p_value,used,dropped\n";
  std::vector<fs::path> upstream;
  for (auto v : cfg.variables()) {
    const auto res = load_residuals(ar1_path(cfg, v), Stage::preprocess);
    upstream.push_back(ar1_path(cfg, v));
    const Matrix e = res.residuals.topRows(rows_before(res.dates, cfg.split));
    const auto N = e.cols();
    std::vector<TestResult> arch(static_cast<std::size_t>(N)), lb(arch.size()), lb2(arch.size());
    std::vector<double> kurt(arch.size());
    parallel_for(arch.size(), cfg.threads, [&](std::size_t i) {
      tagged(res.station_ids[i], [&] {
        const Vector col = e.col(static_cast<Eigen::Index>(i));
        const Vector sq = col.cwiseAbs2();
        arch[i] = arch_lm(as_span(col), cfg.arch_lm_lags);
        lb[i] = ljung_box(as_span(col), cfg.ljung_box_lags);
        lb2[i] = ljung_box(as_span(sq), cfg.ljung_box_lags);
        kurt[i] = excess_kurtosis(as_span(col));
      });
    });
    std::ostringstream st;
    st << "station_id,arch_lm_stat,arch_lm_p,ljung_box_e_p,ljung_box_e2_p,excess_kurtosis\n";
    for (std::size_t i = 0; i < arch.size(); ++i)
      st << res.station_ids[i] << ',' << io::format_double(arch[i].statistic) << ','
         << io::format_double(arch[i].p_value) << ',' << io::format_double(lb[i].p_value) << ','
         << io::format_double(lb2[i].p_value) << ',' << io::format_double(kurt[i]) << '\n';
    write_artifact(artifact(cfg, "diagnose/station_tests_" + var_name(v) + ".csv"), prov(cfg, {ar1_path(cfg, v)}),
                   st.str());
    double mean_kurt = 0.0;
    for (double k : kurt) mean_kurt += k / static_cast<double>(kurt.size());
    summary << var_name(v) << ",arch_lm_reject_pct," << io::format_double(100.0 - pass_rate(arch)) << '\n'
            << var_name(v) << ",ljung_box_e_pass_pct," << io::format_double(pass_rate(lb)) << '\n'
            << var_name(v) << ",ljung_box_e2_pass_pct," << io::format_double(pass_rate(lb2)) << '\n'
            << var_name(v) << ",mean_excess_kurtosis," << io::format_double(mean_kurt) << '\n';

    const Vector mean_e = e.colwise().mean().transpose();
    const Vector mean_e2 = mean_square(e);
    for (const auto& spec : cfg.weights) {
      const auto stem = weight_file_stem(spec, v);
      const auto w = load_weights(cfg, stem);
      upstream.push_back(weight_csv(cfg, stem));
      for (const auto& [proxy, values] : {std::pair<const char*, const Vector*>{"mean_e", &mean_e}, {"mean_e2", &mean_e2}}) {
        const auto m = morans_i(as_span(*values), w);
        moran << spec.name << ',' << var_name(v) << ',' << proxy << ',' << io::format_double(m.i) << ','
              << io::format_double(m.expected) << ',' << io::format_double(m.variance) << ','
              << io::format_double(m.z) << ',' << io::format_double(m.p_value) << ',' << m.used << ',' << m.dropped
              << '\n';
      }
    }
  }
  const auto provenance = prov(cfg, upstream);
  write_artifact(artifact(cfg, "diagnose/summary.csv"), provenance, summary.str());
  write_artifact(artifact(cfg, "diagnose/moran.csv"), provenance, moran.str());
}

void stage_fit_uni(const ExperimentConfig& cfg) {
  if (!cfg.wants("uni_garch") && !cfg.wants("uni_egarch")) return;
  std::ostringstream pref, lbs;
  pref << "variable,criterion,egarch_preferred_pct\n";
  lbs << "variable,model,series,lags,pass_pct\n";
  std::vector<fs::path> upstream;
  for (auto v : cfg.variables()) {
    const auto res = load_residuals(ar1_path(cfg, v), Stage::preprocess);
    upstream.push_back(ar1_path(cfg, v));
    const Matrix e = res.residuals.topRows(rows_before(res.dates, cfg.split));
    const auto n = static_cast<std::size_t>(e.cols());
    std::vector<UniFit> g(n), eg(n);
    UniOptions opts;
    opts.init = cfg.variance_init;
    parallel_for(n, cfg.threads, [&](std::size_t i) {
      tagged(res.station_ids[i], [&] {
        const Vector col = e.col(static_cast<Eigen::Index>(i));
        g[i] = fit_garch(as_span(col), opts);
        eg[i] = fit_egarch(as_span(col), opts);
      });
    });
    json doc{{"variable", var_name(v)}, {"stations", json::array()}};
    std::ostringstream csv;
    csv << "station_id,model,param,estimate,std_error\n";
    for (std::size_t i = 0; i < n; ++i) {
      doc["stations"].push_back({{"id", res.station_ids[i]}, {"garch", uni_to_json(g[i])}, {"egarch", uni_to_json(eg[i])}});
      for (const auto* f : {&g[i], &eg[i]}) {
        const auto names = f->param_names();
        for (std::size_t k = 0; k < names.size(); ++k)
          csv << res.station_ids[i] << ',' << to_string(f->model) << ',' << names[k] << ','
              << io::format_double(f->params[static_cast<Eigen::Index>(k)]) << ','
              << io::format_double(f->std_errors[static_cast<Eigen::Index>(k)]) << '\n';
        csv << res.station_ids[i] << ',' << to_string(f->model) << ",persistence,"
            << io::format_double(f->persistence()) << ",\n";
      }
    }
    const auto provenance = prov(cfg, {ar1_path(cfg, v)});
    write_json(uni_json_path(cfg, v), provenance, doc);
    write_artifact(artifact(cfg, "fit/uni_" + var_name(v) + ".csv"), provenance, csv.str());
    pref << var_name(v) << ",aic," << io::format_double(model_preference(g, eg, Criterion::aic)) << '\n'
         << var_name(v) << ",bic," << io::format_double(model_preference(g, eg, Criterion::bic)) << '\n';
    for (const auto& [name, fits] : {std::pair<const char*, const std::vector<UniFit>*>{"garch", &g}, {"egarch", &eg}}) {
      for (int lags : {cfg.ljung_box_lags, 2 * cfg.ljung_box_lags}) {
        for (bool squared : {false, true}) {
          std::vector<TestResult> r;
          for (const auto& f : *fits) {
            const Vector z = squared ? Vector(f.std_resid.cwiseAbs2()) : f.std_resid;
            r.push_back(ljung_box(as_span(z), lags));
          }
          lbs << var_name(v) << ',' << name << ',' << (squared ? "z2" : "z") << ',' << lags << ','
              << io::format_double(pass_rate(r)) << '\n';
        }
      }
    }
  }
  const auto provenance = prov(cfg, upstream);
  write_artifact(artifact(cfg, "fit/model_preference.csv"), provenance, pref.str());
  write_artifact(artifact(cfg, "fit/uni_ljung_box.csv"), provenance, lbs.str());
}

/// Ljung-Box and per-day Moran pass rates for one residual panel.
void residual_diagnostics(std::ostringstream& os, const std::string& weights, Variable v, const std::string& source,
                          const Matrix& e, const WeightMatrix& w, int lags) {
  const auto row = [&](const char* test, double value) {
    os << weights << ',' << var_name(v) << ',' << source << ',' << test << ',' << io::format_double(value) << '\n';
  };
  row("ljung_box_e", pass_rate(ljung_box_columns(e, lags, false)));
  row("ljung_box_e2", pass_rate(ljung_box_columns(e, lags, true)));
  std::vector<double> p1, p2;
  for (const auto& m : moran_rows(e, w, false)) p1.push_back(m.p_value);
  for (const auto& m : moran_rows(e, w, true)) p2.push_back(m.p_value);
  row("moran_e", p1.empty() ? 0.0 : pass_rate(p1));
  row("moran_e2", p2.empty() ? 0.0 : pass_rate(p2));
}

void stage_fit_sdpd(const ExperimentConfig& cfg) {
  if (!cfg.wants("sdpd")) return;
  std::ostringstream summary, diag;
  summary << "weights,variable,rho,lambda,mean_gamma,sigma2,loglik,lambda_identified\n";
  diag << "weights,variable,source,test,pass_pct\n";
  std::vector<fs::path> upstream;
  for (const auto& spec : cfg.weights) {
    for (auto v : cfg.variables()) {
      const auto stem = weight_file_stem(spec, v);
      const auto w = load_weights(cfg, stem);
      const auto y = load_residuals(remainder_path(cfg, v), Stage::preprocess);
      const auto ar = load_residuals(ar1_path(cfg, v), Stage::preprocess);
      const auto n_train = rows_before(y.dates, cfg.split);
      SdpdOptions opts;
      opts.intercept = cfg.sdpd_intercept;
      opts.threads = cfg.threads;
      const auto fit = fit_sdpd(y.residuals.topRows(n_train), w, opts, y.station_ids);
      const Matrix resid = sdpd_residuals(fit.params, w, y.residuals);
      const std::vector<Date> dates(y.dates.begin() + 1, y.dates.end());
      const std::vector<fs::path> inputs{remainder_path(cfg, v), weight_csv(cfg, stem)};
      const auto provenance = prov(cfg, inputs);
      write_residuals(resid, dates, y.station_ids, sdpd_resid_path(cfg, spec.name, v), provenance);
      json doc{{"weights", spec.name},
               {"variable", var_name(v)},
               {"rho", fit.params.rho},
               {"lambda", fit.params.lambda},
               {"gamma", to_json(fit.params.gamma)},
               {"intercept", to_json(fit.params.intercept)},
               {"sigma2", fit.sigma2},
               {"loglik", to_json(fit.loglik)},
               {"lambda_identified", fit.lambda_identified},
               {"stations", y.station_ids}};
      write_json(artifact(cfg, "fit/sdpd_" + spec.name + "_" + var_name(v) + ".json"), provenance, doc);
      summary << spec.name << ',' << var_name(v) << ',' << io::format_double(fit.params.rho) << ','
              << io::format_double(fit.params.lambda) << ',' << io::format_double(fit.params.gamma.mean()) << ','
              << io::format_double(fit.sigma2) << ',' << io::format_double(fit.loglik) << ','
              << (fit.lambda_identified ? 1 : 0) << '\n';
      residual_diagnostics(diag, spec.name, v, "ar1", ar.residuals.topRows(rows_before(ar.dates, cfg.split)), w,
                           cfg.ljung_box_lags);
      residual_diagnostics(diag, spec.name, v, "sdpd", resid.topRows(rows_before(dates, cfg.split)), w,
                           cfg.ljung_box_lags);
      upstream.insert(upstream.end(), inputs.begin(), inputs.end());
      upstream.push_back(ar1_path(cfg, v));
    }
  }
  const auto provenance = prov(cfg, upstream);
  write_artifact(artifact(cfg, "fit/sdpd_summary.csv"), provenance, summary.str());
  write_artifact(artifact(cfg, "fit/sdpd_diagnostics.csv"), provenance, diag.str());
}

void stage_fit_st(const ExperimentConfig& cfg) {
  if (!cfg.wants("starmagarch")) return;
  std::ostringstream summary, stats;
  summary << "source,weights,variable,param,estimate,std_error,p_value,boundary\n";
  stats << "source,weights,variable,loglik,aic,bic,converged,best_start\n";
  std::vector<fs::path> upstream;
  for (const auto& src : mean_sources(cfg)) {
    for (const auto& spec : cfg.weights) {
      for (auto v : cfg.variables()) {
        const auto stem = weight_file_stem(spec, v);
        const auto w = load_weights(cfg, stem);
        const auto in = residual_source_path(cfg, src, spec, v);
        const auto res = load_residuals(in, residual_source_stage(src));
        StOptions opts;
        opts.station_omega = cfg.station_omega;
        opts.starts = cfg.starts;
        opts.seed = cfg.seed;
        opts.threads = cfg.threads;
        const auto fit = fit_st(res.residuals.topRows(rows_before(res.dates, cfg.split)), w, opts);
        const auto& p = fit.params;
        json doc{{"source", src},
                 {"weights", spec.name},
                 {"variable", var_name(v)},
                 {"params",
                  {{"mu", p.mu}, {"phi", p.phi}, {"theta", p.theta}, {"omega", p.omega}, {"alpha", p.alpha}, {"beta", p.beta}}},
                 {"omega_station", to_json(p.omega_station)},
                 {"names", fit.names},
                 {"estimates", to_json(fit.estimates)},
                 {"std_errors", to_json(fit.std_errors)},
                 {"p_values", to_json(fit.p_values)},
                 {"boundary", fit.boundary},
                 {"loglik", to_json(fit.loglik)},
                 {"aic", to_json(fit.aic)},
                 {"bic", to_json(fit.bic)},
                 {"h1", to_json(fit.h1)},
                 {"converged", fit.converged},
                 {"best_start", fit.best_start},
                 {"start_logliks", fit.start_logliks}};
        const std::vector<fs::path> inputs{in, weight_csv(cfg, stem)};
        write_json(st_json_path(cfg, src, spec.name, v), prov(cfg, inputs), doc);
        for (std::size_t k = 0; k < fit.names.size(); ++k) {
          const auto kk = static_cast<Eigen::Index>(k);
          summary << src << ',' << spec.name << ',' << var_name(v) << ',' << fit.names[k] << ','
                  << io::format_double(fit.estimates[kk]) << ',' << io::format_double(fit.std_errors[kk]) << ','
                  << io::format_double(fit.p_values[kk]) << ',' << (fit.boundary[k] ? 1 : 0) << '\n';
        }
        stats << src << ',' << spec.name << ',' << var_name(v) << ',' << io::format_double(fit.loglik) << ','
              << io::format_double(fit.aic) << ',' << io::format_double(fit.bic) << ',' << (fit.converged ? 1 : 0)
              << ',' << fit.best_start << '\n';
        upstream.insert(upstream.end(), inputs.begin(), inputs.end());
      }
    }
  }
  const auto provenance = prov(cfg, upstream);
  write_artifact(artifact(cfg, "fit/st_summary.csv"), provenance, summary.str());
  write_artifact(artifact(cfg, "fit/st_fit_stats.csv"), provenance, stats.str());
}

HeightPair load_remainders(const ExperimentConfig& cfg, std::vector<Date>* dates = nullptr) {
  HeightPair y;
  int k = 0;
  for (auto v : {Variable::ws10, Variable::ws100}) {
    const auto r = load_residuals(remainder_path(cfg, v), Stage::preprocess);
    y[static_cast<std::size_t>(k++)] = r.residuals;
    if (dates) *dates = r.dates;
  }
  return y;
}

void stage_fit_mv(const ExperimentConfig& cfg) {
  if (!cfg.wants("mv_logarch")) return;
  std::ostringstream summary;
  summary << "weights,equation,param,estimate,std_error\n";
  std::vector<fs::path> upstream;
  std::vector<Date> dates;
  const auto y_all = load_remainders(cfg, &dates);
  const auto n_train = rows_before(dates, cfg.split);
  const HeightPair y{y_all[0].topRows(n_train), y_all[1].topRows(n_train)};
  for (const auto& spec : cfg.weights) {
    const auto stem = weight_stem_for_mv(spec);
    const auto w = load_weights(cfg, stem);
    const auto mean = fit_mv_mean(y, w);
    MvOptions opts;
    opts.lagged_spatial = cfg.mv_lagged_spatial;
    const auto vol = fit_mv_logarch(mean.residuals, w, opts);
    json doc{{"weights", spec.name},
             {"matrix", stem},
             {"mean", system_to_json(mean)},
             {"volatility", system_to_json(vol.system)},
             {"log_sq_floor", vol.log_sq.floor},
             {"log_sq_floored", vol.log_sq.floored}};
    const std::vector<fs::path> inputs{remainder_path(cfg, Variable::ws10), remainder_path(cfg, Variable::ws100),
                                       weight_csv(cfg, stem)};
    write_json(mv_json_path(cfg, spec.name), prov(cfg, inputs), doc);
    for (const auto& [eq, f] : {std::pair<const char*, const MvFit*>{"mean", &mean}, {"volatility", &vol.system}}) {
      const auto row = [&, eq = eq](const std::string& name, double est, double se) {
        summary << spec.name << ',' << eq << ',' << name << ',' << io::format_double(est) << ','
                << io::format_double(se) << '\n';
      };
      const std::string c = std::string(eq) == "mean" ? "beta_" : "A_";
      for (int k = 0; k < 2; ++k) row(c + std::to_string(k + 1), f->params.intercept[k], f->intercept_se[k]);
      for (const auto& [r, col] : {std::pair{0, 0}, {1, 1}, {0, 1}, {1, 0}}) {
        const auto idx = std::to_string(r + 1) + std::to_string(col + 1);
        row("psi_" + idx, f->params.psi(r, col), f->psi_se(r, col));
      }
      for (const auto& [r, col] : {std::pair{0, 0}, {1, 1}, {0, 1}, {1, 0}}) {
        const auto idx = std::to_string(r + 1) + std::to_string(col + 1);
        row("pi_" + idx, f->params.pi(r, col), f->pi_se(r, col));
      }
      row("spectral_radius", f->spectral_radius, std::numeric_limits<double>::quiet_NaN());
    }
    upstream.insert(upstream.end(), inputs.begin(), inputs.end());
  }
  write_artifact(artifact(cfg, "fit/mv_summary.csv"), prov(cfg, upstream), summary.str());
}

// ---- forecasting and evaluation ----------------------------------------

struct ForecastJob {
  std::string file;     // relative to the output directory
  std::string block;
  std::string model;
  std::string weights;
  bool per_height = false;
  Variable variable = Variable::ws10;  // single-height jobs
};

std::vector<ForecastJob> forecast_jobs(const ExperimentConfig& cfg) {
  std::vector<ForecastJob> jobs;
  for (auto v : cfg.variables()) {
    for (const char* m : {"uni_garch", "uni_egarch"}) {
      if (!cfg.wants(m)) continue;
      const std::string model = std::string(m) == "uni_garch" ? "GARCH" : "EGARCH";
      jobs.push_back({"forecast/" + std::string(m) + "_" + var_name(v) + ".csv", "Univariate benchmarks", model, "-",
                      false, v});
    }
  }
  if (cfg.wants("starmagarch")) {
    for (const auto& src : mean_sources(cfg))
      for (const auto& spec : cfg.weights)
        for (auto v : cfg.variables())
          jobs.push_back({"forecast/st_" + src + "_" + spec.name + "_" + var_name(v) + ".csv",
                          src == "ar1" ? "STARMAGARCH on AR(1) residuals" : "STARMAGARCH on SDPD residuals",
                          "STARMAGARCH", spec.name, false, v});
  }
  if (cfg.wants("mv_logarch"))
    for (const auto& spec : cfg.weights)
      jobs.push_back({"forecast/mv_" + spec.name + ".csv", "Bivariate log-ARCH", "MV-logARCH", spec.name, true,
                      Variable::ws10});
  return jobs;
}

/// Test-window rows: date, station_id, [height,] h_hat, eps, train_var.
void append_rows(std::ostringstream& os, const std::vector<Date>& dates, Eigen::Index first_test,
                 const std::vector<std::string>& ids, const std::string* height, const Matrix& h, const Matrix& eps,
                 const Vector& train_var) {
  for (Eigen::Index t = first_test; t < h.rows(); ++t)
    for (Eigen::Index i = 0; i < h.cols(); ++i) {
      os << format_date(dates[static_cast<std::size_t>(t)]) << ',' << ids[static_cast<std::size_t>(i)] << ',';
      if (height) os << *height << ',';
      os << io::format_double(h(t, i)) << ',' << io::format_double(eps(t, i)) << ','
         << io::format_double(train_var[i]) << '\n';
    }
}

void stage_forecast(const ExperimentConfig& cfg) {
  for (const auto& job : forecast_jobs(cfg)) {
    std::ostringstream os;
    std::vector<fs::path> inputs;
    if (job.model == "GARCH" || job.model == "EGARCH") {
      os << "date,station_id,h_hat,eps,train_var\n";
      const auto v = job.variable;
      const auto res = load_residuals(ar1_path(cfg, v), Stage::preprocess);
      need(uni_json_path(cfg, v), Stage::fit_uni);
      const auto doc = read_json(uni_json_path(cfg, v));
      const auto n_train = rows_before(res.dates, cfg.split);
      Matrix h(res.residuals.rows(), res.residuals.cols());
      const auto key = job.model == "GARCH" ? "garch" : "egarch";
      const auto& stations = doc.at("stations");
      if (stations.size() != res.station_ids.size()) throw Error(Errc::ShapeMismatch, "univariate fits do not match the residual panel");
      for (Eigen::Index i = 0; i < h.cols(); ++i) {
        const Vector col = res.residuals.col(i);
        h.col(i) = uni_filter(uni_from_json(stations[static_cast<std::size_t>(i)].at(key)), as_span(col));
      }
      append_rows(os, res.dates, n_train, res.station_ids, nullptr, h, res.residuals,
                  mean_square(res.residuals.topRows(n_train)));
      inputs = {ar1_path(cfg, v), uni_json_path(cfg, v)};
    } else if (job.model == "STARMAGARCH") {
      os << "date,station_id,h_hat,eps,train_var\n";
      const auto v = job.variable;
      const WeightSpec* spec = nullptr;
      for (const auto& s : cfg.weights)
        if (s.name == job.weights) spec = &s;
      const std::string src = job.block.find("SDPD") != std::string::npos ? "sdpd" : "ar1";
      const auto in = residual_source_path(cfg, src, *spec, v);
      const auto res = load_residuals(in, residual_source_stage(src));
      const auto jpath = st_json_path(cfg, src, spec->name, v);
      need(jpath, Stage::fit_st);
      const auto doc = read_json(jpath);
      StFit fit;
      const auto& p = doc.at("params");
      fit.params.mu = p.at("mu");
      fit.params.phi = p.at("phi");
      fit.params.theta = p.at("theta");
      fit.params.omega = p.at("omega");
      fit.params.alpha = p.at("alpha");
      fit.params.beta = p.at("beta");
      fit.params.omega_station = vector_of(doc.at("omega_station"));
      fit.h1 = vector_of(doc.at("h1"));
      const auto stem = weight_file_stem(*spec, v);
      const auto r = st_forecast_path(fit, res.residuals, load_weights(cfg, stem));
      const auto n_train = rows_before(res.dates, cfg.split);
      append_rows(os, res.dates, n_train, res.station_ids, nullptr, r.h, r.eps, mean_square(r.eps.topRows(n_train)));
      inputs = {in, jpath, weight_csv(cfg, stem)};
    } else {
      os << "date,station_id,height,h_hat,eps,train_var\n";
      const WeightSpec* spec = nullptr;
      for (const auto& s : cfg.weights)
        if (s.name == job.weights) spec = &s;
      const auto jpath = mv_json_path(cfg, spec->name);
      need(jpath, Stage::fit_mv);
      const auto doc = read_json(jpath);
      const auto stem = weight_stem_for_mv(*spec);
      const auto w = load_weights(cfg, stem);
      std::vector<Date> dates;
      const auto y = load_remainders(cfg, &dates);
      const auto ids = read_residuals(remainder_path(cfg, Variable::ws10)).station_ids;
      const auto mean = system_from_json(doc.at("mean"));
      const auto vol = system_from_json(doc.at("volatility"));
      const double floor = doc.at("log_sq_floor").get<double>();
      const auto u = mv_residuals(mean, w, y);  // rows are dates[1..]
      HeightPair log_sq;
      for (int k = 0; k < 2; ++k) log_sq[k] = u[k].cwiseAbs2().cwiseMax(floor).array().log().matrix();
      const auto h = mv_forecast_path(vol, w, log_sq, doc.at("volatility").at("lagged_spatial").get<bool>());
      const std::vector<Date> fdates(dates.begin() + 2, dates.end());
      const auto n_train = rows_before(fdates, cfg.split);
      for (int k = 0; k < 2; ++k) {
        const std::string height = k == 0 ? "ws10" : "ws100";
        const Matrix eps = u[k].bottomRows(u[k].rows() - 1);
        append_rows(os, fdates, n_train, ids, &height, h[k], eps, mean_square(eps.topRows(n_train)));
      }
      inputs = {remainder_path(cfg, Variable::ws10), remainder_path(cfg, Variable::ws100), jpath, weight_csv(cfg, stem)};
    }
    write_artifact(artifact(cfg, job.file), prov(cfg, inputs), os.str());
  }
}

struct ForecastBlock {
  std::vector<Date> dates;
  std::vector<std::string> ids;
  Matrix h, eps;
  Vector train_var;
};

/// Forecast file rows grouped by height ("" for single-height files).
std::map<std::string, ForecastBlock> read_forecast(const fs::path& path) {
  const auto t = io::read_csv(path);
  const bool has_height = std::find(t.header.begin(), t.header.end(), "height") != t.header.end();
  const auto cd = t.column("date"), cs = t.column("station_id"), ch = t.column("h_hat"), ce = t.column("eps"),
             cv = t.column("train_var");
  std::map<std::string, std::vector<const std::vector<std::string>*>> groups;
  for (const auto& r : t.rows) groups[has_height ? r[t.column("height")] : std::string()].push_back(&r);
  std::map<std::string, ForecastBlock> out;
  for (const auto& [height, rows] : groups) {
    std::map<std::string, Eigen::Index> sidx;
    std::map<Date, Eigen::Index> didx;
    for (const auto* r : rows) {
      sidx.emplace((*r)[cs], 0);
      didx.emplace(parse_date((*r)[cd]), 0);
    }
    ForecastBlock b;
    for (auto& [id, k] : sidx) {
      k = static_cast<Eigen::Index>(b.ids.size());
      b.ids.push_back(id);
    }
    for (auto& [d, k] : didx) {
      k = static_cast<Eigen::Index>(b.dates.size());
      b.dates.push_back(d);
    }
    const auto T = static_cast<Eigen::Index>(b.dates.size()), N = static_cast<Eigen::Index>(b.ids.size());
    if (static_cast<Eigen::Index>(rows.size()) != T * N)
      throw Error(Errc::MissingCell, "forecast file " + path.string() + " is not a complete panel");
    b.h.resize(T, N);
    b.eps.resize(T, N);
    b.train_var.resize(N);
    for (const auto* r : rows) {
      const auto t_i = didx.at(parse_date((*r)[cd]));
      const auto s_i = sidx.at((*r)[cs]);
      b.h(t_i, s_i) = io::parse_double((*r)[ch]);
      b.eps(t_i, s_i) = io::parse_double((*r)[ce]);
      b.train_var[s_i] = io::parse_double((*r)[cv]);
    }
    out.emplace(height, std::move(b));
  }
  return out;
}

std::string file_safe(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  return s;
}

void stage_evaluate(const ExperimentConfig& cfg) {
  const auto jobs = forecast_jobs(cfg);
  if (jobs.empty()) throw Error(Errc::EmptyList, "no volatility model is configured, nothing to evaluate");
  std::vector<ScoreRow> rows;
  std::vector<fs::path> upstream;
  const ProxyKind svg_proxy =
      std::find(cfg.proxies.begin(), cfg.proxies.end(), ProxyKind::ewma) != cfg.proxies.end() ? ProxyKind::ewma
                                                                                                : cfg.proxies.front();
  for (const auto& job : jobs) {
    const auto path = artifact(cfg, job.file);
    need(path, Stage::forecast);
    upstream.push_back(path);
    for (const auto& [h_key, b] : read_forecast(path)) {
      const std::string height = job.per_height ? h_key : var_name(job.variable);
      for (auto kind : cfg.proxies) {
        ProxySeries proxy;
        if (kind == ProxyKind::ewma) {
          proxy = ewma(b.eps, cfg.ewma_lambda, cfg.ewma_train_init ? std::optional<Vector>(b.train_var) : std::nullopt);
        } else {
          proxy = make_proxy(kind, b.eps, cfg.ewma_lambda);
        }
        const auto s = score(b.h, proxy.values);
        rows.push_back({job.block, job.model, job.weights, std::string(to_string(kind)), height, s.rmsfe, s.mafe,
                        s.used, s.excluded, false, false});
        if (kind != svg_proxy) continue;
        const auto n_svg = std::min<Eigen::Index>(cfg.svg_stations, b.h.cols());
        for (Eigen::Index i = 0; i < n_svg; ++i) {
          const auto id = b.ids[static_cast<std::size_t>(i)];
          const auto title = job.model + " " + job.weights + " " + height + " station " + id;
          const auto stem = fs::path(job.file).stem().string();
          const auto name = job.per_height ? stem + "_" + height + "_" + id : stem + "_" + id;
          io::write_text(artifact(cfg, "evaluate/svg/" + file_safe(name) + ".svg"),
                         "<!--" + prov(cfg, {path}) + "-->\n" +
                             forecast_svg(title, b.h.col(i), proxy.values.col(i)));
        }
      }
    }
  }
  mark_minima(rows);
  const auto provenance = prov(cfg, upstream);
  write_artifact(artifact(cfg, "evaluate/scores.csv"), provenance, score_rows_csv(rows));
  write_artifact(artifact(cfg, "evaluate/scores.txt"), provenance, format_score_table(rows));
}

/// Renders a CSV artifact as a markdown table, numbers to four decimals.
std::string csv_markdown(const fs::path& path) {
  const auto t = io::read_csv(path);
  std::ostringstream os;
  os << '|';
  for (const auto& h : t.header) os << ' ' << h << " |";
  os << "\n|";
  for (std::size_t i = 0; i < t.header.size(); ++i) os << "---|";
  os << '\n';
  for (const auto& r : t.rows) {
    os << '|';
    for (const auto& cell : r) {
      std::string out = cell;
      if (!cell.empty() && cell.find_first_not_of("0123456789+-.eE") == std::string::npos &&
          cell.find_first_of(".eE") != std::string::npos) {
        try {
          out = io::format_fixed(io::parse_double(cell), 4);
        } catch (const Error&) {
        }
      }
      os << ' ' << out << " |";
    }
    os << '\n';
  }
  return os.str();
}

void stage_report(const ExperimentConfig& cfg) {
  const std::vector<std::pair<std::string, std::string>> sections{
      {"Descriptive statistics", "ingest/stats.csv"},
      {"Residual diagnostics (AR(1) residuals, training sample)", "diagnose/summary.csv"},
      {"Moran's I on station-level residual means", "diagnose/moran.csv"},
      {"EGARCH preference by information criterion", "fit/model_preference.csv"},
      {"Ljung-Box pass rates of standardised univariate residuals", "fit/uni_ljung_box.csv"},
      {"SDPD estimates", "fit/sdpd_summary.csv"},
      {"Residual diagnostics, AR(1) versus SDPD", "fit/sdpd_diagnostics.csv"},
      {"STARMAGARCH estimates", "fit/st_summary.csv"},
      {"STARMAGARCH fit statistics", "fit/st_fit_stats.csv"},
      {"Bivariate log-ARCH estimates", "fit/mv_summary.csv"},
  };
  std::vector<fs::path> upstream;
  for (const auto& [title, file] : sections)
    if (fs::exists(artifact(cfg, file))) upstream.push_back(artifact(cfg, file));
  const auto scores = artifact(cfg, "evaluate/scores.csv");
  need(scores, Stage::evaluate);
  upstream.push_back(scores);

  std::ostringstream os;
  os << "<!--" << prov(cfg, upstream) << "-->\n";
  os << "# Wind speed volatility report\n\n";
  if (cfg.synthetic) os << "> **SYNTHETIC DATA.** These results come from simulated data and say nothing about real wind.\n\n";
  os << "- tool version: " << kToolVersion << "\n- config hash: " << cfg.hash << "\n- split: " << format_date(cfg.split)
     << "\n- seed: " << cfg.seed << "\n\n## Upstream artifacts\n\n| file | fnv1a |\n|---|---|\n";
  for (const auto& p : upstream) os << "| " << rel(cfg, p) << " | " << io::fnv1a_hex(io::read_text(p)) << " |\n";
  for (const auto& [title, file] : sections) {
    if (!fs::exists(artifact(cfg, file))) continue;
    os << "\n## " << title << "\n\n" << csv_markdown(artifact(cfg, file));
  }
  os << "\n## Forecast accuracy (log scale, test window)\n\n```\n";
  const auto table = io::read_text(artifact(cfg, "evaluate/scores.txt"));
  os << table.substr(table.find('\n') + 1) << "```\n";
  io::write_text(artifact(cfg, "report/report.md"), os.str());
}

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::ingest: return "ingest";
    case Stage::preprocess: return "preprocess";
    case Stage::weights: return "weights";
    case Stage::diagnose: return "diagnose";
    case Stage::fit_uni: return "fit-uni";
    case Stage::fit_sdpd: return "fit-sdpd";
    case Stage::fit_st: return "fit-st";
    case Stage::fit_mv: return "fit-mv";
    case Stage::forecast: return "forecast";
    case Stage::evaluate: return "evaluate";
    case Stage::report: return "report";
  }
  return "?";
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages{Stage::ingest,   Stage::preprocess, Stage::weights,  Stage::diagnose,
                                         Stage::fit_uni,  Stage::fit_sdpd,   Stage::fit_st,   Stage::fit_mv,
                                         Stage::forecast, Stage::evaluate,   Stage::report};
  return stages;
}

std::string provenance_line(const ExperimentConfig& cfg, const std::vector<fs::path>& upstream) {
  std::string out = "windvol " + std::string(kToolVersion) + " config=" + cfg.hash;
  std::set<std::string> seen;
  for (const auto& p : upstream) {
    const auto name = rel(cfg, p);
    if (!seen.insert(name).second) continue;
    out += " " + name + "=" + io::fnv1a_hex(io::read_text(p));
  }
  return out;
}

void run_stage(Stage stage, const ExperimentConfig& cfg) {
  switch (stage) {
    case Stage::ingest: return stage_ingest(cfg);
    case Stage::preprocess: return stage_preprocess(cfg);
    case Stage::weights: return stage_weights(cfg);
    case Stage::diagnose: return stage_diagnose(cfg);
    case Stage::fit_uni: return stage_fit_uni(cfg);
    case Stage::fit_sdpd: return stage_fit_sdpd(cfg);
    case Stage::fit_st: return stage_fit_st(cfg);
    case Stage::fit_mv: return stage_fit_mv(cfg);
    case Stage::forecast: return stage_forecast(cfg);
    case Stage::evaluate: return stage_evaluate(cfg);
    case Stage::report: return stage_report(cfg);
  }
}

void run_all(const ExperimentConfig& cfg) {
  for (auto s : all_stages()) run_stage(s, cfg);
}

}  // namespace windvol
