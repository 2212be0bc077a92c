#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mfg/ctmc.hpp"
#include "mfg/hamiltonian.hpp"
#include "mfg/measure.hpp"
#include "mfg/problem.hpp"

namespace mfg {

/// Value function V(t_k, i) on the grid.
struct ValueSurface {
  TimeGrid grid;
  Eigen::MatrixXd V;  // n_nodes x m

  Eigen::VectorXd at_node(int k) const { return V.row(k); }
  Eigen::VectorXd at(double t) const;  // linear interpolation
  double sup_distance(const ValueSurface& other) const {
    return (V - other.V).cwiseAbs().maxCoeff();
  }
};

/// Feedback policy a(t_k, i) on the grid, one control per state per node.
struct PolicySurface {
  TimeGrid grid;
  std::vector<Eigen::MatrixXd> a;  // per node: m x l

  int control_dim() const { return a.empty() ? 0 : static_cast<int>(a.front().cols()); }

  // Simulation-side evaluation: the node value extends forward over its cell.
  Eigen::VectorXd at_left(double t, int i) const {
    return a[grid.left_node(t)].row(i);
  }
  // Deterministic cost evaluation interpolates linearly between nodes.
  Eigen::VectorXd at_linear(double t, int i) const;
};

struct ValueSolution {
  ValueSurface value;
  PolicySurface policy;
  int tie_warnings = 0;
};

// Backward solve of the value system
//   dV_i/dt + inf_a [ f(t,e_i,a,p_t,nu_t) + sum_{j!=i} q(t,i,j,a,p_t,nu_t) (V_j - V_i) ] = 0,
//   V_i(T) = g(e_i, p_T),
// by classical RK4 with the Hamiltonian minimized at every stage. The policy
// is recorded at grid nodes.
ValueSolution solve_value(const ProblemSpec& spec, const SimplexFlow& p_flow,
                          const ControlFlow& nu_flow);

// Expected-cost vector J(0, .) of a fixed Markov feedback policy against
// frozen flows: the linear backward equation with the policy's rates and
// running cost. The policy is interpolated linearly in time.
Eigen::VectorXd evaluate_policy_cost(const ProblemSpec& spec, const PolicySurface& policy,
                                     const SimplexFlow& p_flow, const ControlFlow& nu_flow);

// Rates induced by a policy (applied piecewise-constant from the left node).
RateFn policy_rate_fn(const ProblemSpec& spec, const PolicySurface& policy,
                      const SimplexFlow& p_flow, const ControlFlow& nu_flow);

/// Per-path accumulation of int_0^T f(t, X_t, a(t, X_t), p_t, nu_t) dt.
/// Full grid cells come from a precomputed prefix table (Simpson per cell);
/// the partial cells around jump times are integrated on the fly.
class PathCostIntegrator {
 public:
  PathCostIntegrator(const ProblemSpec& spec, const PolicySurface& policy,
                     const SimplexFlow& p_flow, const ControlFlow& nu_flow);

  double running_cost(const PathRecord& path) const;
  double total_cost(const PathRecord& path) const;  // adds g(X_T, p_T)

 private:
  double piece(double u, double v, int cell, int state) const;

  const ProblemSpec& spec_;
  const PolicySurface& policy_;
  const SimplexFlow& p_flow_;
  const ControlFlow& nu_flow_;
  Eigen::MatrixXd prefix_;  // n_nodes x m
  Eigen::VectorXd terminal_;
};

struct ResidualStats {
  double mean = 0.0;
  double se = 0.0;
  int n_paths = 0;
};

// Monte Carlo check of the martingale property of the value process: paths
// are simulated under the policy's rates and the per-path residual
//   g(X_T, p_T) + int f dt - V(0, X_0)
// must have mean 0 up to sampling error when V solves the value system.
ResidualStats martingale_residual(const ProblemSpec& spec, const ValueSurface& V,
                                  const PolicySurface& policy, const SimplexFlow& p_flow,
                                  const ControlFlow& nu_flow, int n_paths, std::uint64_t seed,
                                  int threads = 1);

enum class PerturbMode { ConstantShift, Random };

// Sup-norm response of the value surface to a size-eps perturbation of the
// terminal cost.
double stability_probe(const ProblemSpec& spec, const SimplexFlow& p_flow,
                       const ControlFlow& nu_flow, double eps, PerturbMode mode,
                       std::uint64_t seed = 0);

}  // namespace mfg
