#include "curvesparse/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace curvesparse;

  CLI::App app{"Sparse domination experiments for Hilbert transforms along monomial curves"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned long long seed = 0;
  unsigned workers = 0;
  bool refine = false;
  app.add_option("--config", config_path, "JSON config file (defaults are used when omitted)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides the config's output)");
  auto* seed_opt = app.add_option("--seed", seed, "seed for all random test functions");
  app.add_option("--workers", workers, "worker threads (0: hardware concurrency)");
  app.add_flag("--refine", refine, "double quadrature nodes and mesh counts");

  const char* help[] = {"dyadic grid property suite",
                        "localized support check and calibration of N",
                        "Fourier decay of the arc measure",
                        "continuity exponent of the single-scale average",
                        "sparse construction and domination ratio",
                        "scan outside the admissible region",
                        "weighted bound check",
                        "admissible region vertices and membership"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < subcommands().size(); ++i) {
    auto* sub = app.add_subcommand(subcommands()[i], help[i]);
    sub->fallthrough();
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  std::string chosen;
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) chosen = subcommands()[i];

  ExperimentConfig config;
  try {
    config = config_path.empty() ? default_config() : load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "curvesparse: " << e.what() << "\n";
    return 2;
  }

  RunOptions options;
  options.out = out_dir;
  if (*seed_opt) options.seed = seed;
  options.workers = workers;
  options.refine = refine;
  try {
    const Json report = run_subcommand(chosen, config, options);
    std::cout << report["report"].dump(2) << "\n";
  } catch (const ConfigError& e) {
    std::cerr << "curvesparse " << chosen << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "curvesparse " << chosen << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
