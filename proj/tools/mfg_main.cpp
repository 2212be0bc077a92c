#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>

#include "mfg/scenario.hpp"

namespace {

int env_threads() {
  const char* env = std::getenv("MFG_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-state mean field game solver and Monte Carlo verification toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = env_threads();

  struct Sub {
    const char* name;
    const char* desc;
    int (*run)(const mfg::ScenarioConfig&);
  };
  const Sub subs[] = {
      {"solve", "compute the equilibrium flows, value and policy", mfg::cmd_solve},
      {"simulate", "sample paths under the solved policy and compare marginals",
       mfg::cmd_simulate},
      {"evaluate-cost", "cost of the solved policy via the backward equation",
       mfg::cmd_evaluate_cost},
      {"verify-equilibrium", "consistency residuals, best-response gap, martingale residual",
       mfg::cmd_verify_equilibrium},
      {"nplayer", "finite-player chaos statistics and deviation tests", mfg::cmd_nplayer},
      {"check-monotone", "sample the monotonicity conditions for uniqueness",
       mfg::cmd_check_monotone},
      {"likelihood-check", "change-of-measure verification", mfg::cmd_likelihood_check},
  };

  std::vector<std::pair<CLI::App*, int (*)(const mfg::ScenarioConfig&)>> wired;
  for (const Sub& sub : subs) {
    CLI::App* cmd = app.add_subcommand(sub.name, sub.desc);
    cmd->add_option("--config", config_path, "scenario config (JSON)")->required();
    cmd->add_option("--out", out_dir, "output directory (default from config)");
    cmd->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
      seed_set = true;
    });
    cmd->add_option("--threads", threads, "worker threads (env MFG_THREADS)");
    wired.emplace_back(cmd, sub.run);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    mfg::CliOverrides overrides;
    if (seed_set) overrides.seed = seed;
    if (!out_dir.empty()) overrides.out_dir = out_dir;
    overrides.threads = threads;
    const mfg::ScenarioConfig cfg = mfg::load_scenario(config_path, overrides);
    for (const auto& [cmd, run] : wired)
      if (cmd->parsed()) return run(cfg);
    std::cerr << "no subcommand selected\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
