#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mfg/equilibrium.hpp"
#include "mfg/measure.hpp"
#include "mfg/problem.hpp"

namespace mfg {

/// One simulation of N independent players, each running the mean field
/// policy on its own state, with the empirical fields sampled on the grid.
struct NPlayerRun {
  int N = 0;
  std::vector<PathRecord> paths;
  SimplexFlow empirical_p;   // states at nodes
  ControlFlow empirical_nu;  // controls at nodes, states taken as left limits
  std::uint64_t seed = 0;
};

// Requires rates free of mean field terms (flags.mean_field_in_q unset).
NPlayerRun simulate_nplayer(const ProblemSpec& spec, const EquilibriumSolution& sol, int N,
                            std::uint64_t seed, int threads = 1);

struct ChaosRow {
  int N = 0;
  double mse_state = 0.0;  // rep average of the node-averaged |p^N - p*|^2
  double se_state = 0.0;
  double mse_w1 = 0.0;     // same for W1^2 of the control fields
  double se_w1 = 0.0;
  double sup_mse_state = 0.0;  // rep average of the worst node, diagnostic
  double bound = 0.0;          // m / (4N)
};

struct ChaosReport {
  std::vector<ChaosRow> rows;
  double state_slope = 0.0;    // log-log fit of mse_state vs N
  double control_slope = 0.0;  // log-log fit of mse_w1 vs N
};

ChaosReport chaos_error(const ProblemSpec& spec, const EquilibriumSolution& sol,
                        const std::vector<int>& N_list, int reps, std::uint64_t seed,
                        int threads = 1);

struct DeviationRow {
  int id = 0;
  double gain = 0.0;  // cost(deviation profile) - cost(policy profile); >= 0 means no profit
  double se = 0.0;
};

struct DeviationReport {
  int N = 0;
  int n_mc = 0;
  std::vector<DeviationRow> rows;
  double max_profit = 0.0;  // max over deviations of (-gain) clipped at 0
};

// Player 1 deviates to each candidate policy while everyone else keeps the
// mean field policy; costs use the empirical fields of the full profile.
// Common random numbers pair every deviation with the same baseline run, so
// the identical-policy row is exactly zero.
DeviationReport deviation_gain(const ProblemSpec& spec, const EquilibriumSolution& sol, int N,
                               const std::vector<PolicySurface>& deviations, int n_mc,
                               std::uint64_t seed, int threads = 1);

// Deterministic candidate grid for deviation tests: the solved policy,
// constant policies spanning the box, and shifted copies of the policy.
std::vector<PolicySurface> deviation_grid(const ProblemSpec& spec, const EquilibriumSolution& sol,
                                          int n, std::uint64_t seed);

// Generator of the joint chain of independent factors (Kronecker sum).
// Product dimension capped at 4096.
RateMatrix kron_generator(const std::vector<RateMatrix>& factors);

// Two-factor seminorm split: the joint-chain seminorm of z_tilde at the
// product state equals the sum of the per-factor seminorms of the partial
// contractions. True within 1e-12 by construction of the joint generator.
bool kron_psi_identity(const std::vector<int>& states, const Eigen::VectorXd& z_tilde, int m1,
                       int m2);

}  // namespace mfg
