#include "tlsnoise/cli.hpp"
#include "tlsnoise/version.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace tlsnoise;

int main(int argc, char** argv) {
  CLI::App app{"Driven two-level-fluctuator noise: spectra, dephasing times and sweeps"};
  app.set_version_flag("--version", std::string(version()));

  std::string config_path;
  std::string preset;
  std::string out_dir;
  int parallel = -1;
  bool faithful = false;
  std::int64_t seed = -1;
  bool print_config = false;
  bool list_presets = false;

  auto* cfg_opt = app.add_option("--config", config_path, "JSON run config (or a manifest)");
  auto* preset_opt =
      app.add_option("--preset", preset, "figure preset: fig2a fig2b fig3 fig4 fig5a fig5b "
                                         "fig6a fig6b fig7");
  cfg_opt->excludes(preset_opt);
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--parallel", parallel, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  app.add_flag("--faithful", faithful, "shared fs = 1e3, t_max = 1e3 window for ensemble members");
  app.add_option("--seed", seed, "base seed of the telegraph oracle (classical-check)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--print-config", print_config, "print the resolved config and exit");
  app.add_flag("--list-presets", list_presets, "list figure presets and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::config_invalid;
  }

  if (list_presets) {
    for (const auto& name : cli::preset_names()) {
      std::cout << name << ": " << cli::figure_preset(name).note << '\n';
    }
    return cli::ok;
  }

  cli::RunConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = cli::load_config(config_path);
    } else if (!preset.empty()) {
      cfg = cli::figure_preset(preset);
    } else {
      std::cerr << "error: give --config or --preset\n" << app.help();
      return cli::config_invalid;
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (parallel >= 0) cfg.parallel = parallel;
    if (faithful) cfg.ensemble.options.mode = EnsembleMode::faithful;
    if (seed >= 0) cfg.classical.seed = static_cast<std::uint64_t>(seed);
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for(e);
  }

  if (print_config) {
    std::cout << cli::serialize(cfg);
    return cli::ok;
  }

  const cli::Outcome outcome = cli::execute(cfg, std::cout);
  if (outcome.exit_code != cli::ok) std::cerr << "error: " << outcome.message << '\n';
  return outcome.exit_code;
}
