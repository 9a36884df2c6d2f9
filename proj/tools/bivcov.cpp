#include <CLI11.hpp>

#include "bivcov/cli/commands.hpp"

int main(int argc, char** argv) {
  using bivcov::cli::RunConfig;
  RunConfig cfg;
  CLI::App app{"Bivariate covariance models: validity bounds, spectra, simulation, fitting and cokriging"};
  app.require_subcommand(1);

  auto* validate = app.add_subcommand("validate", "Check a model file against the validity criteria");
  validate->add_option("model,--model", cfg.model_path, "Model file")->required();
  validate->add_option("--dim", cfg.dim, "Spatial dimension (1, 2 or 3)");
  validate->add_option("--out", cfg.out_path, "Output file (default stdout)");

  auto* curve = app.add_subcommand("curve", "Maximum attainable |rho| along one or two parameter sweeps");
  curve->add_option("model,--model", cfg.model_path, "Model file")->required();
  curve->add_option("--sweep", cfg.sweeps, "name=lo:hi:steps (repeat for a second parameter)")->required();
  curve->add_option("--dim", cfg.dim, "Spatial dimension (1, 2 or 3)");
  curve->add_option("--out", cfg.out_path, "CSV output (default stdout)");

  auto* spectral = app.add_subcommand("spectral", "Tabulate the spectral densities f11, f12, f22");
  spectral->add_option("model,--model", cfg.model_path, "Model file")->required();
  spectral->add_option("--dim", cfg.dim, "Spatial dimension (1 or 3)");
  spectral->add_option("--umax", cfg.umax, "Largest frequency");
  spectral->add_option("--points", cfg.points, "Number of frequencies in (0, umax]");
  spectral->add_option("--out", cfg.out_path, "CSV output (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "Simulate both components of a Gaussian field");
  simulate->add_option("model,--model", cfg.model_path, "Model file")->required();
  simulate->add_option("--grid", cfg.grid, "Regular grid lo:hi:steps per axis");
  simulate->add_option("--points", cfg.points_path, "CSV of locations (x[,y[,z]][,component])");
  simulate->add_option("--dim", cfg.dim, "Grid dimension (1, 2 or 3)");
  simulate->add_option("--seed", cfg.seed, "Random seed");
  simulate->add_option("--out", cfg.out_path, "CSV output (default stdout)");

  auto* fit = app.add_subcommand("fit", "Maximum likelihood fit to a data CSV");
  fit->add_option("data,--data", cfg.data_path, "Data CSV (x[,y[,z]],component,value)")->required();
  fit->add_option("--kind", cfg.kind, "stable, cauchy, matern or lmc");
  fit->add_option("--seed", cfg.seed, "Seed for the start points");
  fit->add_option("--starts", cfg.starts, "Number of simplex starts");
  fit->add_option("--evals", cfg.max_evaluations, "Objective evaluations per start");
  fit->add_option("--nugget", cfg.nugget, "zero or free");
  fit->add_option("--transform", cfg.transform, "none or log (applied to values)");
  fit->add_flag("--log", cfg.verbose, "Report progress on stderr");
  fit->add_option("--out", cfg.out_path, "Fitted model file (default stdout)");

  auto* krige = app.add_subcommand("krige", "Simple cokriging at target locations");
  krige->add_option("model,--model", cfg.model_path, "Model file")->required();
  krige->add_option("--data", cfg.data_path, "Data CSV")->required();
  krige->add_option("--targets", cfg.targets_path, "Target CSV (x[,y[,z]])")->required();
  krige->add_option("--component", cfg.component, "Component to predict (1 or 2)");
  krige->add_option("--transform", cfg.transform, "none or log (applied to data values)");
  krige->add_option("--out", cfg.out_path, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bivcov::cli::kBadInput;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();
  return bivcov::cli::run(cfg);
}
