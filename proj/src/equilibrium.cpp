#include "mfg/equilibrium.hpp"

#include <cmath>
#include <stdexcept>

#include "mfg/ctmc.hpp"
#include "mfg/rng.hpp"

namespace mfg {

namespace {

struct PhiImage {
  SimplexFlow p;
  ControlFlow nu;
  ValueSolution sol;
};

// One application of the consistency map at frozen flows.
PhiImage apply_phi(const ProblemSpec& spec, const SimplexFlow& p_flow,
                   const ControlFlow& nu_flow) {
  PhiImage out;
  out.sol = solve_value(spec, p_flow, nu_flow);
  const RateFn rates = policy_rate_fn(spec, out.sol.policy, p_flow, nu_flow);
  out.p = forward_flow(rates, spec.p_init, p_flow.grid);
  out.nu.grid = nu_flow.grid;
  out.nu.measures.resize(nu_flow.grid.n_nodes());
  for (int k = 0; k < nu_flow.grid.n_nodes(); ++k)
    out.nu.measures[k] =
        pushforward_policy(out.sol.policy.a[k], SimplexPoint(out.p.values.row(k)));
  return out;
}

// Nodewise sups of the state and control residuals.
struct Residual {
  double state = 0.0;
  double control = 0.0;
};

Residual residual_between(const SimplexFlow& p, const ControlFlow& nu, const SimplexFlow& p2,
                          const ControlFlow& nu2) {
  Residual r;
  for (int k = 0; k < p.grid.n_nodes(); ++k) {
    r.state = std::max(r.state, (p.values.row(k) - p2.values.row(k)).cwiseAbs().sum());
    r.control = std::max(r.control, w1(nu.measures[k], nu2.measures[k]));
  }
  return r;
}

}  // namespace

EquilibriumSolution picard_solve(const ProblemSpec& spec, const TimeGrid& grid,
                                 const PicardOptions& opts,
                                 std::optional<std::pair<SimplexFlow, ControlFlow>> init) {
  if (!(opts.damping > 0.0 && opts.damping <= 1.0))
    throw std::invalid_argument("picard_solve: damping must lie in (0, 1]");

  EquilibriumSolution sol;
  if (init) {
    sol.p_flow = init->first;
    sol.nu_flow = init->second;
  } else {
    sol.p_flow = SimplexFlow::constant(grid, spec.p_init);
    // Start the control flow at the standalone cost minimizer.
    const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(spec.m);
    const Eigen::VectorXd a0 = minimize_hamiltonian(spec, 0.0, 0, z0, spec.p_init.w).alpha;
    sol.nu_flow = ControlFlow(grid, DiscreteMeasure::dirac(a0));
  }

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    PhiImage phi = apply_phi(spec, sol.p_flow, sol.nu_flow);
    const Residual res = residual_between(sol.p_flow, sol.nu_flow, phi.p, phi.nu);
    sol.trace.push_back({iter, res.state, res.control});
    sol.value = phi.sol.value;
    sol.policy = phi.sol.policy;
    // The two sups may peak at different nodes; their sum dominates the
    // nodewise combined residual, so this stop certifies both parts.
    if (res.state + res.control < opts.tol) {
      sol.converged = true;
      return sol;
    }
    const double theta = opts.damping;
    sol.p_flow.values = (1.0 - theta) * sol.p_flow.values + theta * phi.p.values;
    for (int k = 0; k < grid.n_nodes(); ++k)
      sol.nu_flow.measures[k] = damp_measures(sol.nu_flow.measures[k], phi.nu.measures[k], theta);
  }
  sol.converged = false;
  return sol;
}

std::pair<double, double> consistency_residual(const ProblemSpec& spec,
                                               const EquilibriumSolution& sol) {
  const PhiImage phi = apply_phi(spec, sol.p_flow, sol.nu_flow);
  const Residual res = residual_between(sol.p_flow, sol.nu_flow, phi.p, phi.nu);
  return {res.state, res.control};
}

BestResponseReport best_response_gap(const ProblemSpec& spec, const EquilibriumSolution& sol,
                                     int n_candidates, std::uint64_t seed) {
  const TimeGrid& grid = sol.p_flow.grid;
  const int m = spec.m;
  const int l = spec.control_dim();
  const Eigen::VectorXd v0 = sol.value.at_node(0);

  BestResponseReport rep;
  Rng rng(derive_seed(seed, 0xb3));

  std::vector<PolicySurface> candidates;
  candidates.push_back(sol.policy);  // the solved policy itself

  // Systematic perturbations and constant corner policies.
  const Eigen::VectorXd span = spec.box.hi - spec.box.lo;
  for (double delta : {0.05, -0.05, 0.2, -0.2}) {
    PolicySurface cand = sol.policy;
    for (auto& node : cand.a)
      for (int i = 0; i < m; ++i)
        node.row(i) = spec.box.clamp(node.row(i).transpose() + delta * span).transpose();
    candidates.push_back(std::move(cand));
  }
  for (int corner = 0; corner < std::min(spec.box.n_corners(), 4); ++corner) {
    PolicySurface cand;
    cand.grid = grid;
    cand.a.assign(grid.n_nodes(),
                  Eigen::VectorXd(spec.box.corner(static_cast<unsigned>(corner)))
                      .transpose()
                      .replicate(m, 1));
    candidates.push_back(std::move(cand));
  }

  while (static_cast<int>(candidates.size()) < n_candidates) {
    PolicySurface cand;
    cand.grid = grid;
    cand.a.assign(grid.n_nodes(), Eigen::MatrixXd::Zero(m, l));
    // Random feedback: smooth noise around the solved policy half the time,
    // otherwise a random constant per state.
    const bool around_solution = rng.uniform() < 0.5;
    if (around_solution) {
      Eigen::MatrixXd offset(m, l);
      for (int i = 0; i < m; ++i)
        for (int c = 0; c < l; ++c) offset(i, c) = (2.0 * rng.uniform() - 1.0) * 0.3 * span(c);
      for (int k = 0; k < grid.n_nodes(); ++k) {
        cand.a[k] = sol.policy.a[k] + offset;
        for (int i = 0; i < m; ++i)
          cand.a[k].row(i) = spec.box.clamp(cand.a[k].row(i).transpose()).transpose();
      }
    } else {
      Eigen::MatrixXd constant(m, l);
      for (int i = 0; i < m; ++i)
        for (int c = 0; c < l; ++c)
          constant(i, c) = spec.box.lo(c) + rng.uniform() * span(c);
      for (int k = 0; k < grid.n_nodes(); ++k) cand.a[k] = constant;
    }
    candidates.push_back(std::move(cand));
  }

  rep.n_candidates = static_cast<int>(candidates.size());
  for (int c = 0; c < rep.n_candidates; ++c) {
    const Eigen::VectorXd J = evaluate_policy_cost(spec, candidates[c], sol.p_flow, sol.nu_flow);
    const double shortfall = (v0 - J).maxCoeff();  // positive iff the candidate undercuts V
    if (shortfall > rep.gap) {
      rep.gap = shortfall;
      rep.worst_candidate = c;
      rep.worst_value = shortfall;
    }
  }
  rep.gap = std::max(rep.gap, 0.0);
  return rep;
}

}  // namespace mfg
