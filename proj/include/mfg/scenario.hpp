#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mfg/equilibrium.hpp"
#include "mfg/problem.hpp"

namespace mfg {

inline constexpr const char* kVersion = "0.1.0";

/// Parsed run configuration: the model spec plus grid, solver, Monte Carlo
/// and finite-player settings. The seed is mandatory; there is no wall-clock
/// fallback.
struct ScenarioConfig {
  nlohmann::json raw;
  ProblemSpec spec;
  TimeGrid grid;
  PicardOptions solver;
  int mc_paths = 100000;
  std::uint64_t seed = 0;

  std::vector<int> chaos_N_list{8, 16, 32, 64, 128, 256, 512};
  int chaos_reps = 64;
  std::vector<int> deviation_N_values{16, 256};
  int n_deviations = 25;
  int deviation_n_mc = 256;

  // likelihood-check settings
  Eigen::VectorXd likelihood_alpha;  // constant control for the marginal check
  double likelihood_t = 0.0;

  std::filesystem::path out_dir = "run";
  int threads = 1;
};

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

ScenarioConfig load_scenario(const std::filesystem::path& config_path,
                             const CliOverrides& overrides);

// Subcommand pipelines. Each writes its artifacts plus manifest.json into
// cfg.out_dir and returns the process exit code: 0 success, 1 validation
// failure, 2 solver non-convergence (trace still written).
int cmd_solve(const ScenarioConfig& cfg);
int cmd_simulate(const ScenarioConfig& cfg);
int cmd_evaluate_cost(const ScenarioConfig& cfg);
int cmd_verify_equilibrium(const ScenarioConfig& cfg);
int cmd_nplayer(const ScenarioConfig& cfg);
int cmd_check_monotone(const ScenarioConfig& cfg);
int cmd_likelihood_check(const ScenarioConfig& cfg);

}  // namespace mfg
