// Batch driver for interior solves, curvature flows, and identity audits.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ktorsion/orchestrate.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "ktorsion: support-function curvature flows driven by k-Hessian torsion.\n"
      "Exit codes: 0 ok, 2 config, 3 capability, 4 convexity, 5 solver,\n"
      "6 stiffness/non-convergence, 7 verification failure, 8 i/o, 9 internal."};

  std::string config_path;
  std::string subcommand;
  std::string out_override;
  bool quiet = false;

  app.add_option("--config", config_path, "configuration file (key = value, [sections])");
  app.add_option("--subcommand", subcommand,
                 "one of solve-interior|flow|check-hadamard|verify|functionals")
      ->required();
  app.add_option("--out", out_override, "output directory (overrides config)");
  app.add_flag("--quiet", quiet, "suppress progress output");

  CLI11_PARSE(app, argc, argv);

  try {
    ktorsion::RunConfig cfg;
    if (!config_path.empty())
      cfg = ktorsion::parse_config(ktorsion::read_file(config_path));
    else if (subcommand != "verify") {
      std::cerr << "config error: --config is required for subcommand '" << subcommand
                << "'\n";
      return 2;
    }
    if (const char* env = std::getenv("KTORSION_OUT"); env && *env) cfg.out_dir = env;
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (quiet) cfg.quiet = true;

    const auto sub = ktorsion::parse_subcommand(subcommand);
    return ktorsion::orchestrate(cfg, sub);
  } catch (const ktorsion::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ktorsion::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 8;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 9;
  }
}
