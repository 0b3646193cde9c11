// Command-line front end for the wind volatility pipeline.

#include "windvol/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

int exit_code(const windvol::Error& e) {
  if (e.code() == windvol::Errc::ConfigInvalid) return kExitConfig;
  return windvol::is_numerical(e.code()) ? kExitNumerical : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace windvol;
  CLI::App app{"Spatio-temporal wind speed volatility pipeline"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--config", config_path, "Experiment config (TOML)");
  app.add_option("--out", out_dir, "Output directory, overrides the config");
  app.add_option("--seed", seed, "Random seed, overrides the config");
  app.add_option("--threads", threads, "Worker threads, overrides the config")->check(CLI::PositiveNumber);

  std::vector<std::pair<CLI::App*, Stage>> stage_cmds;
  const std::pair<const char*, const char*> help[] = {
      {"ingest", "Load panels, descriptive statistics, station table"},
      {"preprocess", "STL decomposition and AR(1) residuals"},
      {"weights", "Build and export spatial weight matrices"},
      {"diagnose", "ARCH-LM, Ljung-Box and Moran's I on the residuals"},
      {"fit-uni", "Station-wise GARCH and EGARCH"},
      {"fit-sdpd", "Spatial dynamic panel mean model"},
      {"fit-st", "STARMAGARCH on AR(1) and SDPD residuals"},
      {"fit-mv", "Bivariate spatial log-ARCH"},
      {"forecast", "Rolling one-step-ahead variance forecasts"},
      {"evaluate", "RMSFE and MAFE against the volatility proxies"},
      {"report", "Markdown report from the evaluated artifacts"},
  };
  for (std::size_t i = 0; i < all_stages().size(); ++i)
    stage_cmds.emplace_back(app.add_subcommand(help[i].first, help[i].second), all_stages()[i]);
  auto* run = app.add_subcommand("run", "All stages in order");
  auto* repro = app.add_subcommand("reproduce", "All stages plus the comparison with published reference values");
  auto* synth = app.add_subcommand("synth", "Write the small synthetic dataset");
  std::string synth_dir;
  int synth_stations = 5;
  synth->add_option("dir", synth_dir, "Target directory")->required();
  synth->add_option("--stations", synth_stations, "Number of stations")->check(CLI::Range(3, 1000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      write_synthetic_dataset(synth_dir, seed == 0 ? 1 : seed, synth_stations);
      std::cout << "wrote synthetic dataset to " << synth_dir << '\n';
      return 0;
    }
    if (config_path.empty()) throw Error(Errc::ConfigInvalid, "--config is required");
    ConfigOverrides ov;
    if (!out_dir.empty()) ov.output = out_dir;
    if (app.count("--seed")) ov.seed = seed;
    if (threads > 0) ov.threads = threads;
    const auto cfg = load_config(config_path, ov);

    if (run->parsed()) {
      for (auto s : all_stages()) {
        std::cerr << "[" << to_string(s) << "]\n";
        run_stage(s, cfg);
      }
    } else if (repro->parsed()) {
      reproduce(cfg);
    } else {
      for (const auto& [cmd, stage] : stage_cmds)
        if (cmd->parsed()) run_stage(stage, cfg);
    }
    std::cout << "config " << cfg.hash << ", artifacts in " << cfg.output.string() << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
