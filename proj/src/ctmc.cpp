#include "mfg/ctmc.hpp"

#include <stdexcept>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>

namespace mfg {

RateFn rate_fn_of(const RateMatrix& Q) {
  Eigen::MatrixXd entries = Q.entries;
  return [entries](double, int i) {
    Eigen::VectorXd row = entries.row(i);
    row(i) = 0.0;
    return row;
  };
}

PathRecord simulate_path(const RateFn& rates, const SimplexPoint& p0, double T,
                         double max_exit_rate, Rng& rng) {
  if (!(max_exit_rate > 0.0)) throw std::invalid_argument("simulate_path: majorant must be > 0");
  PathRecord path;
  path.horizon = T;
  path.initial_state = rng.categorical(p0.w, p0.w.sum());

  int state = path.initial_state;
  double t = 0.0;
  while (true) {
    t += rng.exp_time(max_exit_rate);
    if (t >= T) break;
    Eigen::VectorXd r = rates(t, state);
    r(state) = 0.0;
    double total = 0.0;
    for (int j = 0; j < r.size(); ++j) {
      if (r(j) < 0.0)
        throw std::runtime_error("simulate_path: negative rate at t=" + std::to_string(t) +
                                 " state=" + std::to_string(state));
      total += r(j);
    }
    if (total > max_exit_rate * (1.0 + 1e-12))
      throw std::runtime_error("simulate_path: exit rate " + std::to_string(total) +
                               " exceeds majorant at t=" + std::to_string(t));
    // Thinning: accept a real jump with probability total / majorant.
    if (rng.uniform() * max_exit_rate < total) {
      state = rng.categorical(r, total);
      path.jumps.push_back({t, state});
    }
  }
  return path;
}

namespace {

Eigen::MatrixXd generator_at(const RateFn& rates, double t, int m) {
  Eigen::MatrixXd Q(m, m);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd r = rates(t, i);
    r(i) = 0.0;
    Q.row(i) = r;
    Q(i, i) = -r.sum();
  }
  return Q;
}

}  // namespace

SimplexFlow forward_flow(const RateFn& rates, const SimplexPoint& p0, const TimeGrid& grid) {
  const int m = p0.dim();
  SimplexFlow flow(grid, m);
  Eigen::VectorXd p = p0.w;
  flow.values.row(0) = p;
  const double dt = grid.dt();
  auto deriv = [&](double t, const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return generator_at(rates, t, m).transpose() * v;
  };
  for (int k = 0; k < grid.n_steps; ++k) {
    const double t = grid.node(k);
    const Eigen::VectorXd k1 = deriv(t, p);
    const Eigen::VectorXd k2 = deriv(t + 0.5 * dt, p + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = deriv(t + 0.5 * dt, p + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = deriv(t + dt, p + dt * k3);
    p += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    for (int i = 0; i < m; ++i) {
      if (p(i) < -1e-10)
        throw std::runtime_error("forward_flow: weight " + std::to_string(p(i)) +
                                 " below tolerance at node " + std::to_string(k + 1) +
                                 "; reduce the step size");
      if (p(i) < 0.0) p(i) = 0.0;
    }
    p /= p.sum();
    flow.values.row(k + 1) = p;
  }
  return flow;
}

std::vector<int> states_at_nodes(const PathRecord& path, const TimeGrid& grid) {
  std::vector<int> out(grid.n_nodes());
  int s = path.initial_state;
  std::size_t pt = 0;
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const double tk = grid.node(k);
    while (pt < path.jumps.size() && path.jumps[pt].time <= tk) s = path.jumps[pt++].state;
    out[k] = s;
  }
  return out;
}

SimplexPoint matexp_marginal(const RateMatrix& Q, const SimplexPoint& p0, double t) {
  Eigen::MatrixXd M = (t * Q.entries.transpose()).exp();
  Eigen::VectorXd p = M * p0.w;
  for (int i = 0; i < p.size(); ++i)
    if (p(i) < 0.0 && p(i) > -1e-12) p(i) = 0.0;
  p /= p.sum();
  return SimplexPoint(p);
}

}  // namespace mfg
