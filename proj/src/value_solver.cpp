#include "mfg/value_solver.hpp"

#include <cmath>
#include <stdexcept>

#include "mfg/parallel.hpp"
#include "mfg/rng.hpp"

namespace mfg {

Eigen::VectorXd ValueSurface::at(double t) const {
  if (t <= 0.0) return V.row(0);
  if (t >= grid.T) return V.row(grid.n_steps);
  const int k = grid.cell_left(t);
  const double dt = grid.dt();
  const double s = (t - k * dt) / dt;
  return (1.0 - s) * V.row(k) + s * V.row(k + 1);
}

Eigen::VectorXd PolicySurface::at_linear(double t, int i) const {
  if (t <= 0.0) return a.front().row(i);
  if (t >= grid.T) return a.back().row(i);
  const int k = grid.cell_left(t);
  const double dt = grid.dt();
  const double s = (t - k * dt) / dt;
  return (1.0 - s) * a[k].row(i) + s * a[k + 1].row(i);
}

namespace {

void check_flows(const ProblemSpec& spec, const SimplexFlow& p_flow, const ControlFlow& nu_flow) {
  if (p_flow.dim() != spec.m)
    throw std::invalid_argument("flow dimension does not match the state count");
  if (p_flow.grid.n_steps != nu_flow.grid.n_steps ||
      std::abs(p_flow.grid.T - nu_flow.grid.T) > 1e-12)
    throw std::invalid_argument("state and control flows must share one grid");
}

}  // namespace

ValueSolution solve_value(const ProblemSpec& spec, const SimplexFlow& p_flow,
                          const ControlFlow& nu_flow) {
  check_flows(spec, p_flow, nu_flow);
  const TimeGrid grid = p_flow.grid;
  const int m = spec.m;
  const double h = grid.dt();

  ValueSolution sol;
  sol.value.grid = grid;
  sol.value.V.resize(grid.n_nodes(), m);
  sol.policy.grid = grid;
  sol.policy.a.assign(grid.n_nodes(), Eigen::MatrixXd::Zero(m, spec.control_dim()));

  const Eigen::VectorXd pT = p_flow.at(grid.T);
  for (int i = 0; i < m; ++i) sol.value.V(grid.n_steps, i) = spec.terminal_cost(i, pT);

  auto driver = [&](double t, const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const Eigen::VectorXd p = p_flow.at(t);
    const DiscreteMeasure& nu = nu_flow.at_left(t);
    Eigen::VectorXd out(m);
    for (int i = 0; i < m; ++i) {
      MinimizeResult res = minimize_hamiltonian(spec, t, i, v, p);
      if (!res.converged)
        throw std::runtime_error("solve_value: Hamiltonian minimizer failed at t=" +
                                 std::to_string(t) + " state=" + std::to_string(i));
      if (res.tie_warning) ++sol.tie_warnings;
      out(i) = controlled_driver(spec, t, i, v, res.alpha, p, &nu);
    }
    return out;
  };

  auto record_policy = [&](int k) {
    const double t = grid.node(k);
    const Eigen::VectorXd p = p_flow.at(t);
    const Eigen::VectorXd v = sol.value.V.row(k);
    for (int i = 0; i < m; ++i)
      sol.policy.a[k].row(i) = minimize_hamiltonian(spec, t, i, v, p).alpha;
  };

  record_policy(grid.n_steps);
  for (int k = grid.n_steps - 1; k >= 0; --k) {
    const double t1 = grid.node(k + 1);
    const Eigen::VectorXd v1 = sol.value.V.row(k + 1);
    const Eigen::VectorXd k1 = driver(t1, v1);
    const Eigen::VectorXd k2 = driver(t1 - 0.5 * h, v1 + 0.5 * h * k1);
    const Eigen::VectorXd k3 = driver(t1 - 0.5 * h, v1 + 0.5 * h * k2);
    const Eigen::VectorXd k4 = driver(t1 - h, v1 + h * k3);
    sol.value.V.row(k) = v1 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    record_policy(k);
  }
  return sol;
}

Eigen::VectorXd evaluate_policy_cost(const ProblemSpec& spec, const PolicySurface& policy,
                                     const SimplexFlow& p_flow, const ControlFlow& nu_flow) {
  check_flows(spec, p_flow, nu_flow);
  const TimeGrid grid = p_flow.grid;
  const int m = spec.m;
  const double h = grid.dt();

  auto driver = [&](double t, const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const Eigen::VectorXd p = p_flow.at(t);
    const DiscreteMeasure& nu = nu_flow.at_left(t);
    Eigen::VectorXd out(m);
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd alpha = spec.box.clamp(policy.at_linear(t, i));
      out(i) = controlled_driver(spec, t, i, v, alpha, p, &nu);
    }
    return out;
  };

  const Eigen::VectorXd pT = p_flow.at(grid.T);
  Eigen::VectorXd J(m);
  for (int i = 0; i < m; ++i) J(i) = spec.terminal_cost(i, pT);
  for (int k = grid.n_steps - 1; k >= 0; --k) {
    const double t1 = grid.node(k + 1);
    const Eigen::VectorXd k1 = driver(t1, J);
    const Eigen::VectorXd k2 = driver(t1 - 0.5 * h, J + 0.5 * h * k1);
    const Eigen::VectorXd k3 = driver(t1 - 0.5 * h, J + 0.5 * h * k2);
    const Eigen::VectorXd k4 = driver(t1 - h, J + h * k3);
    J += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return J;
}

RateFn policy_rate_fn(const ProblemSpec& spec, const PolicySurface& policy,
                      const SimplexFlow& p_flow, const ControlFlow& nu_flow) {
  return [&spec, &policy, &p_flow, &nu_flow](double t, int i) {
    const Eigen::VectorXd alpha = policy.at_left(t, i);
    const DiscreteMeasure& nu = nu_flow.at_left(t);
    return spec.rate_row(t, i, alpha, p_flow.at(t), &nu);
  };
}

PathCostIntegrator::PathCostIntegrator(const ProblemSpec& spec, const PolicySurface& policy,
                                       const SimplexFlow& p_flow, const ControlFlow& nu_flow)
    : spec_(spec), policy_(policy), p_flow_(p_flow), nu_flow_(nu_flow) {
  const TimeGrid& grid = p_flow.grid;
  const int m = spec.m;
  prefix_ = Eigen::MatrixXd::Zero(grid.n_nodes(), m);
  for (int k = 0; k < grid.n_steps; ++k) {
    const double a = grid.node(k), b = grid.node(k + 1);
    for (int i = 0; i < m; ++i) prefix_(k + 1, i) = prefix_(k, i) + piece(a, b, k, i);
  }
  const Eigen::VectorXd pT = p_flow.at(grid.T);
  terminal_.resize(m);
  for (int i = 0; i < m; ++i) terminal_(i) = spec.terminal_cost(i, pT);
}

double PathCostIntegrator::piece(double u, double v, int cell, int state) const {
  if (v <= u) return 0.0;
  // Policy and control measure are constant over the cell (left-node value);
  // only the state marginal varies, linearly, so Simpson is effectively exact
  // for the built-in cost families.
  const Eigen::VectorXd alpha = policy_.a[cell].row(state);
  const DiscreteMeasure& nu = nu_flow_.at_node(cell);
  auto f = [&](double t) {
    return spec_.running_cost(t, state, alpha, p_flow_.at(t), &nu);
  };
  const double mid = 0.5 * (u + v);
  return (v - u) / 6.0 * (f(u) + 4.0 * f(mid) + f(v));
}

double PathCostIntegrator::running_cost(const PathRecord& path) const {
  const TimeGrid& grid = p_flow_.grid;
  double cost = 0.0;
  double seg_start = 0.0;
  int state = path.initial_state;
  auto add_segment = [&](double a, double b, int s) {
    if (b <= a) return;
    const int ca = grid.cell_left(a);
    const int cb = grid.cell_left(b);
    if (ca == cb) {
      cost += piece(a, b, ca, s);
      return;
    }
    cost += piece(a, grid.node(ca + 1), ca, s);
    cost += prefix_(cb, s) - prefix_(ca + 1, s);
    cost += piece(grid.node(cb), b, cb, s);
  };
  for (const auto& j : path.jumps) {
    add_segment(seg_start, j.time, state);
    seg_start = j.time;
    state = j.state;
  }
  add_segment(seg_start, path.horizon, state);
  return cost;
}

double PathCostIntegrator::total_cost(const PathRecord& path) const {
  return running_cost(path) + terminal_(path.state_at(path.horizon));
}

ResidualStats martingale_residual(const ProblemSpec& spec, const ValueSurface& V,
                                  const PolicySurface& policy, const SimplexFlow& p_flow,
                                  const ControlFlow& nu_flow, int n_paths, std::uint64_t seed,
                                  int threads) {
  const RateFn rates = policy_rate_fn(spec, policy, p_flow, nu_flow);
  const PathCostIntegrator integ(spec, policy, p_flow, nu_flow);
  const Eigen::VectorXd v0 = V.at_node(0);

  std::vector<double> residual(n_paths);
  parallel_for(n_paths, threads, [&](int idx) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(idx)));
    const PathRecord path = simulate_path(rates, spec.p_init, spec.T, spec.max_exit_rate(), rng);
    residual[idx] = integ.total_cost(path) - v0(path.initial_state);
  });

  ResidualStats stats;
  stats.n_paths = n_paths;
  double sum = 0.0;
  for (double r : residual) sum += r;
  stats.mean = sum / n_paths;
  double ss = 0.0;
  for (double r : residual) ss += (r - stats.mean) * (r - stats.mean);
  stats.se = std::sqrt(ss / (static_cast<double>(n_paths) - 1.0) / n_paths);
  return stats;
}

double stability_probe(const ProblemSpec& spec, const SimplexFlow& p_flow,
                       const ControlFlow& nu_flow, double eps, PerturbMode mode,
                       std::uint64_t seed) {
  const ValueSolution base = solve_value(spec, p_flow, nu_flow);

  ProblemSpec perturbed = spec;
  const ProblemSpec::TerminalFn g0 = spec.g;
  if (mode == PerturbMode::ConstantShift) {
    perturbed.g = [g0, eps](int i, const Eigen::VectorXd& p) { return g0(i, p) + eps; };
  } else {
    Rng rng(derive_seed(seed, 0x9e7));
    Eigen::VectorXd u(spec.m);
    for (int i = 0; i < spec.m; ++i) u(i) = 2.0 * rng.uniform() - 1.0;
    perturbed.g = [g0, eps, u](int i, const Eigen::VectorXd& p) { return g0(i, p) + eps * u(i); };
  }
  const ValueSolution shifted = solve_value(perturbed, p_flow, nu_flow);
  return shifted.value.sup_distance(base.value);
}

}  // namespace mfg
