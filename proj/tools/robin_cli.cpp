// robin: Robin eigenvalue experiments from a JSON config.

#include <CLI11.hpp>
#include <exception>
#include <iostream>
#include <string>

#include "robin/cli.hpp"
#include "robin/config.hpp"

int main(int argc, char** argv) {
  namespace rc = robin::cli;
  CLI::App app{"Robin eigenvalue monotonicity experiments on polygonal domains"};
  app.footer(rc::exit_code_table());
  app.fallthrough();

  std::string config_path;
  rc::RunOptions opt;
  std::string out_dir = ".";
  app.add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", opt.seed, "Seed for randomized checks")->capture_default_str();
  app.add_flag("--quiet", opt.quiet, "Suppress console output");
  app.add_flag("--export-mesh", opt.export_mesh, "Also write mesh.txt");
  app.add_flag("--export-matrices", opt.export_matrices, "Also write S1.mtx, S2.mtx and M.mtx");

  app.add_subcommand("solve", "Smallest eigenvalues for theta1: spectrum.csv");
  app.add_subcommand("compare", "Compare theta1 <= theta2: monotonicity.csv, nid.csv, trace.csv, summary.txt");
  app.add_subcommand("sweep", "Eigencurves along (1 - t) theta1 + t theta2: eigencurves.csv");
  app.add_subcommand("converge", "Refinement study: converge.csv, richardson.csv");
  app.add_subcommand("check", "Invariant suite on the configured instance: check.txt");
  app.require_subcommand(1, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? rc::kExitOk : rc::kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  opt.out_dir = out_dir;
  try {
    const robin::ExperimentConfig cfg = robin::load_config(config_path);
    return rc::run(command, cfg, opt, std::cout);
  } catch (const robin::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rc::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return rc::kExitInternal;
  }
}
