#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mfg/measure.hpp"
#include "mfg/problem.hpp"
#include "mfg/value_solver.hpp"

namespace mfg {

struct PicardOptions {
  double damping = 0.5;  // in (0, 1]; 1 is the undamped map
  double tol = 1e-6;
  int max_iter = 200;
};

struct IterationTrace {
  int iter = 0;
  double state_res = 0.0;
  double control_res = 0.0;
};

struct EquilibriumSolution {
  SimplexFlow p_flow;
  ControlFlow nu_flow;
  ValueSurface value;
  PolicySurface policy;
  std::vector<IterationTrace> trace;
  bool converged = false;
};

// Damped fixed-point iteration on the consistency map: solve the value
// system against the current flows, push the induced marginal flow and
// control law forward, then mix with weight `damping`. Stops when the
// residual between the iterate and its raw image drops below tol (measured
// before damping, so the returned flows reproduce their own image within
// tol). Non-convergence is reported, not thrown.
EquilibriumSolution picard_solve(const ProblemSpec& spec, const TimeGrid& grid,
                                 const PicardOptions& opts,
                                 std::optional<std::pair<SimplexFlow, ControlFlow>> init =
                                     std::nullopt);

// One full application of the consistency map at the solution's flows;
// returns (sup_t ||p - Phi_p||_1, sup_t W1(nu, Phi_nu)).
std::pair<double, double> consistency_residual(const ProblemSpec& spec,
                                               const EquilibriumSolution& sol);

struct BestResponseReport {
  double gap = 0.0;  // max over candidates of (V - J) clipped below at 0
  int n_candidates = 0;
  int worst_candidate = -1;
  double worst_value = 0.0;
};

// No sampled Markov policy (random draws plus systematic perturbations of
// the solved policy) may undercut the solved value against the frozen flows.
BestResponseReport best_response_gap(const ProblemSpec& spec, const EquilibriumSolution& sol,
                                     int n_candidates, std::uint64_t seed);

}  // namespace mfg
