#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "countcos/errors.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

}  // namespace

int main(int argc, char** argv) {
  using namespace countcos;
  CLI::App app{"Bayesian change of support for survey counts"};
  app.require_subcommand(1);

  cli::CommonOptions common;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::string out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Override the random seed");
    sub->add_option("--threads", threads, "Maximum worker threads");
    sub->add_option("-o,--out", out_dir, "Output directory");
  };

  std::string fit_config;
  auto* fit = app.add_subcommand("fit", "Fit the model and write a draw store");
  fit->add_option("config", fit_config, "JSON run configuration")->required();
  add_common(fit);

  std::string store, targets;
  cli::CosOptions cos_options;
  double raster = 0.0;
  auto* cos = app.add_subcommand("cos", "Summarise stored draws on a target support");
  cos->add_option("store", store, "Draw store")->required()->check(CLI::ExistingFile);
  cos->add_option("targets", targets, "Target GeoJSON")->required()->check(CLI::ExistingFile);
  cos->add_option("--level", cos_options.level, "Credible level")->check(CLI::Range(0.0, 1.0));
  cos->add_option("--raster-cell", raster, "Raster fallback cell size for failed clips");
  cos->add_option("--name", cos_options.stem, "Output file stem");
  add_common(cos);

  std::string study_config;
  auto* sim = app.add_subcommand("simulate", "Run the replicate simulation study");
  sim->add_option("config", study_config, "JSON study configuration")->required();
  add_common(sim);

  std::string diag_store;
  auto* diag = app.add_subcommand("diagnose", "Posterior predictive p-value and convergence report");
  diag->add_option("store", diag_store, "Draw store")->required()->check(CLI::ExistingFile);
  add_common(diag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  CLI::App* used = app.get_subcommands().front();
  if (used->count("--seed")) common.seed = seed;
  if (used->count("--threads")) common.threads = threads;
  if (used->count("--out")) common.output_dir = out_dir;

  try {
    if (fit->parsed()) {
      (void)cli::cmd_fit(cli::load_run_config(fit_config), common, std::cerr);
    } else if (cos->parsed()) {
      if (raster > 0.0) cos_options.raster_cell_size = raster;
      (void)cli::cmd_cos(store, targets, cos_options, common, std::cerr);
    } else if (sim->parsed()) {
      (void)cli::cmd_simulate(cli::load_study_config(study_config), common, std::cerr);
    } else if (diag->parsed()) {
      (void)cli::cmd_diagnose(diag_store, common, std::cerr);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
