#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "bsnse/io/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spectral Galerkin solver and verification harness for the 2D backward stochastic Navier-Stokes equation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;

  const std::map<std::string, std::string> about = {
      {"simulate", "solve, write u(0), a path slice, per-node diagnostics and the a priori report"},
      {"invariants", "sampled operator identities, inequalities and forcing bounds"},
      {"oracle-linear", "compare u(0) per mode with the closed-form linear solution"},
      {"oracle-reversal", "compare a deterministic backward solve with the reversed forward run"},
      {"estimates", "coercivity, B difference and energy Gronwall audits"},
      {"uniqueness", "two-seed gap against the estimator-error budget"},
  };
  for (const auto& [name, fn] : bsnse::subcommands()) {
    (void)fn;
    auto* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config_path, "key = value config file, or a manifest.json to reproduce");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "overrides solver.seed");
    sub->add_option("--threads", threads, "worker count; results do not depend on it")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bsnse::kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  bsnse::Config cfg;
  try {
    if (!config_path.empty()) cfg = bsnse::Config::load(config_path);
  } catch (const bsnse::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return bsnse::kExitConfig;
  } catch (const bsnse::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return bsnse::kExitConfig;
  }
  return bsnse::run_command(name, cfg, out_dir, seed, threads, std::cout, std::cerr);
}
