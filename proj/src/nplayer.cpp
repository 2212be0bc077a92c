#include "mfg/nplayer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mfg/ctmc.hpp"
#include "mfg/parallel.hpp"
#include "mfg/rng.hpp"

namespace mfg {

namespace {

void require_mean_field_free_rates(const ProblemSpec& spec) {
  if (spec.flags.mean_field_in_q)
    throw std::invalid_argument(
        "finite-player mode requires transition rates free of mean field terms "
        "(flags.mean_field_in_q must be false)");
}

// States at every node: right limits (the node value) and left limits.
void node_states(const PathRecord& path, const TimeGrid& grid, std::vector<int>& right,
                 std::vector<int>& left) {
  const int n = grid.n_nodes();
  right.resize(n);
  left.resize(n);
  int sl = path.initial_state, sr = path.initial_state;
  std::size_t pl = 0, pr = 0;
  for (int k = 0; k < n; ++k) {
    const double tk = grid.node(k);
    while (pl < path.jumps.size() && path.jumps[pl].time < tk) sl = path.jumps[pl++].state;
    while (pr < path.jumps.size() && path.jumps[pr].time <= tk) sr = path.jumps[pr++].state;
    left[k] = sl;
    right[k] = sr;
  }
}

double slope_loglog(const std::vector<double>& n_values, const std::vector<double>& y_values) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(n_values.size());
  for (int i = 0; i < n; ++i) {
    const double x = std::log(n_values[i]);
    const double y = std::log(std::max(y_values[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

NPlayerRun simulate_nplayer(const ProblemSpec& spec, const EquilibriumSolution& sol, int N,
                            std::uint64_t seed, int threads) {
  require_mean_field_free_rates(spec);
  const TimeGrid& grid = sol.p_flow.grid;

  NPlayerRun run;
  run.N = N;
  run.seed = seed;
  run.paths.resize(N);
  const RateFn rates = policy_rate_fn(spec, sol.policy, sol.p_flow, sol.nu_flow);
  parallel_for(N, threads, [&](int n) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(n)));
    run.paths[n] = simulate_path(rates, spec.p_init, spec.T, spec.max_exit_rate(), rng);
  });

  run.empirical_p = SimplexFlow(grid, spec.m);
  run.empirical_nu.grid = grid;
  run.empirical_nu.measures.resize(grid.n_nodes());
  Eigen::MatrixXd counts_right = Eigen::MatrixXd::Zero(grid.n_nodes(), spec.m);
  Eigen::MatrixXd counts_left = Eigen::MatrixXd::Zero(grid.n_nodes(), spec.m);
  std::vector<int> right, left;
  for (int n = 0; n < N; ++n) {
    node_states(run.paths[n], grid, right, left);
    for (int k = 0; k < grid.n_nodes(); ++k) {
      counts_right(k, right[k]) += 1.0;
      counts_left(k, left[k]) += 1.0;
    }
  }
  for (int k = 0; k < grid.n_nodes(); ++k) {
    run.empirical_p.values.row(k) = counts_right.row(k) / N;
    run.empirical_nu.measures[k] =
        pushforward_policy(sol.policy.a[k], SimplexPoint(counts_left.row(k) / N));
  }
  return run;
}

ChaosReport chaos_error(const ProblemSpec& spec, const EquilibriumSolution& sol,
                        const std::vector<int>& N_list, int reps, std::uint64_t seed,
                        int threads) {
  require_mean_field_free_rates(spec);
  const TimeGrid& grid = sol.p_flow.grid;
  const int n_nodes = grid.n_nodes();
  const RateFn rates = policy_rate_fn(spec, sol.policy, sol.p_flow, sol.nu_flow);

  // Reference fields of the mean field solution.
  std::vector<DiscreteMeasure> nu_star(n_nodes);
  for (int k = 0; k < n_nodes; ++k)
    nu_star[k] = pushforward_policy(sol.policy.a[k], SimplexPoint(sol.p_flow.values.row(k)));

  ChaosReport report;
  for (std::size_t ni = 0; ni < N_list.size(); ++ni) {
    const int N = N_list[ni];
    std::vector<double> rep_state(reps), rep_w1(reps), rep_sup(reps);
    parallel_for(reps, threads, [&](int r) {
      const std::uint64_t rep_seed =
          derive_seed(seed, static_cast<std::uint64_t>(ni) * 100003ULL + r);
      Eigen::MatrixXd counts_right = Eigen::MatrixXd::Zero(n_nodes, spec.m);
      Eigen::MatrixXd counts_left = Eigen::MatrixXd::Zero(n_nodes, spec.m);
      std::vector<int> right, left;
      for (int n = 0; n < N; ++n) {
        Rng rng(derive_seed(rep_seed, static_cast<std::uint64_t>(n)));
        const PathRecord path =
            simulate_path(rates, spec.p_init, spec.T, spec.max_exit_rate(), rng);
        node_states(path, grid, right, left);
        for (int k = 0; k < n_nodes; ++k) {
          counts_right(k, right[k]) += 1.0;
          counts_left(k, left[k]) += 1.0;
        }
      }
      double acc_state = 0.0, acc_w1 = 0.0, sup_state = 0.0;
      for (int k = 0; k < n_nodes; ++k) {
        const Eigen::VectorXd p_hat = counts_right.row(k) / N;
        const double err = (p_hat - sol.p_flow.values.row(k).transpose()).squaredNorm();
        acc_state += err;
        sup_state = std::max(sup_state, err);
        const DiscreteMeasure nu_hat =
            pushforward_policy(sol.policy.a[k], SimplexPoint(counts_left.row(k) / N));
        const double d = w1(nu_hat, nu_star[k]);
        acc_w1 += d * d;
      }
      rep_state[r] = acc_state / n_nodes;
      rep_w1[r] = acc_w1 / n_nodes;
      rep_sup[r] = sup_state;
    });

    ChaosRow row;
    row.N = N;
    row.bound = spec.m / (4.0 * N);
    auto mean_se = [&](const std::vector<double>& xs, double& mean, double& se) {
      mean = 0.0;
      for (double x : xs) mean += x;
      mean /= xs.size();
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      se = std::sqrt(ss / (xs.size() - 1.0) / xs.size());
    };
    mean_se(rep_state, row.mse_state, row.se_state);
    mean_se(rep_w1, row.mse_w1, row.se_w1);
    double dummy_se = 0.0;
    mean_se(rep_sup, row.sup_mse_state, dummy_se);
    report.rows.push_back(row);
  }

  std::vector<double> ns, mses, w1s;
  for (const auto& row : report.rows) {
    ns.push_back(row.N);
    mses.push_back(row.mse_state);
    w1s.push_back(row.mse_w1);
  }
  report.state_slope = slope_loglog(ns, mses);
  report.control_slope = slope_loglog(ns, w1s);
  return report;
}

namespace {

struct OtherJump {
  double time;
  int from;
  int to;
};

// Cost of player 1 under its own policy while the others follow theirs,
// integrated against the empirical fields of the whole profile.
double player1_profile_cost(const ProblemSpec& spec, const EquilibriumSolution& sol,
                            const PolicySurface& beta, const TimeGrid& grid,
                            const std::vector<int>& other_init,
                            const std::vector<OtherJump>& other_jumps, const PathRecord& path1,
                            int N) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(spec.m);
  for (int s : other_init) counts(s) += 1.0;
  int x1 = path1.initial_state;
  counts(x1) += 1.0;

  DiscreteMeasure nu_cell;
  const bool need_nu = spec.has_control_coupling;
  auto refresh_nu = [&](int node, int x1_left, const Eigen::VectorXd& counts_left) {
    if (!need_nu) return;
    // Controls of the others are the policy at their left-limit states; the
    // deviator contributes one beta atom.
    Eigen::MatrixXd atoms(spec.m + 1, spec.control_dim());
    Eigen::VectorXd weights(spec.m + 1);
    for (int i = 0; i < spec.m; ++i) {
      atoms.row(i) = sol.policy.a[node].row(i);
      weights(i) = counts_left(i) / N;
    }
    atoms.row(spec.m) = beta.a[node].row(x1_left);
    weights(spec.m) = 1.0 / N;
    DiscreteMeasure raw;
    raw.atoms = std::move(atoms);
    raw.weights = std::move(weights);
    nu_cell = raw.canonical();
  };

  {
    Eigen::VectorXd counts_left = counts;
    counts_left(x1) -= 1.0;
    refresh_nu(0, x1, counts_left);
  }

  double cost = 0.0;
  double t = 0.0;
  int cell = 0;
  std::size_t io = 0, i1 = 0;

  auto integrate_piece = [&](double u, double v) {
    if (v <= u) return;
    const Eigen::VectorXd p_emp = counts / N;
    const Eigen::VectorXd alpha = beta.a[cell].row(x1);
    auto f = [&](double s) {
      return spec.running_cost(s, x1, alpha, p_emp, need_nu ? &nu_cell : nullptr);
    };
    const double mid = 0.5 * (u + v);
    cost += (v - u) / 6.0 * (f(u) + 4.0 * f(mid) + f(v));
  };

  while (t < grid.T) {
    const double t_other =
        io < other_jumps.size() ? other_jumps[io].time : std::numeric_limits<double>::infinity();
    const double t_own =
        i1 < path1.jumps.size() ? path1.jumps[i1].time : std::numeric_limits<double>::infinity();
    const double t_node = cell + 1 <= grid.n_steps ? grid.node(cell + 1) : grid.T;
    const double t_next = std::min({t_other, t_own, t_node, grid.T});

    integrate_piece(t, t_next);
    t = t_next;
    if (t >= grid.T) break;
    if (t == t_other) {
      const OtherJump& j = other_jumps[io++];
      counts(j.from) -= 1.0;
      counts(j.to) += 1.0;
    } else if (t == t_own) {
      counts(x1) -= 1.0;
      x1 = path1.jumps[i1++].state;
      counts(x1) += 1.0;
    } else if (t == t_node) {
      ++cell;
      Eigen::VectorXd counts_left = counts;
      counts_left(x1) -= 1.0;
      refresh_nu(cell, x1, counts_left);
    }
  }

  const Eigen::VectorXd p_term = counts / N;
  return cost + spec.terminal_cost(path1.state_at(grid.T), p_term);
}

}  // namespace

DeviationReport deviation_gain(const ProblemSpec& spec, const EquilibriumSolution& sol, int N,
                               const std::vector<PolicySurface>& deviations, int n_mc,
                               std::uint64_t seed, int threads) {
  require_mean_field_free_rates(spec);
  const TimeGrid& grid = sol.p_flow.grid;
  const RateFn base_rates = policy_rate_fn(spec, sol.policy, sol.p_flow, sol.nu_flow);
  const int n_dev = static_cast<int>(deviations.size());

  std::vector<std::vector<double>> gains(n_dev, std::vector<double>(n_mc));
  parallel_for(n_mc, threads, [&](int r) {
    // Everyone but player 1, shared across all deviations of this rep.
    std::vector<int> other_init(N - 1);
    std::vector<OtherJump> other_jumps;
    for (int n = 1; n < N; ++n) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(n)));
      const PathRecord path =
          simulate_path(base_rates, spec.p_init, spec.T, spec.max_exit_rate(), rng);
      other_init[n - 1] = path.initial_state;
      int prev = path.initial_state;
      for (const auto& j : path.jumps) {
        other_jumps.push_back({j.time, prev, j.state});
        prev = j.state;
      }
    }
    std::sort(other_jumps.begin(), other_jumps.end(),
              [](const OtherJump& a, const OtherJump& b) { return a.time < b.time; });

    const std::uint64_t p1_seed = derive_seed(seed, static_cast<std::uint64_t>(r), 0);
    auto run_player1 = [&](const PolicySurface& beta) {
      Rng rng(p1_seed);  // common random numbers across deviations
      const RateFn rates = policy_rate_fn(spec, beta, sol.p_flow, sol.nu_flow);
      const PathRecord path1 =
          simulate_path(rates, spec.p_init, spec.T, spec.max_exit_rate(), rng);
      return player1_profile_cost(spec, sol, beta, grid, other_init, other_jumps, path1, N);
    };

    const double base_cost = run_player1(sol.policy);
    for (int d = 0; d < n_dev; ++d) gains[d][r] = run_player1(deviations[d]) - base_cost;
  });

  DeviationReport rep;
  rep.N = N;
  rep.n_mc = n_mc;
  for (int d = 0; d < n_dev; ++d) {
    DeviationRow row;
    row.id = d;
    double mean = 0.0;
    for (double g : gains[d]) mean += g;
    mean /= n_mc;
    double ss = 0.0;
    for (double g : gains[d]) ss += (g - mean) * (g - mean);
    row.gain = mean;
    row.se = std::sqrt(ss / (n_mc - 1.0) / n_mc);
    rep.rows.push_back(row);
    rep.max_profit = std::max(rep.max_profit, -mean);
  }
  rep.max_profit = std::max(rep.max_profit, 0.0);
  return rep;
}

std::vector<PolicySurface> deviation_grid(const ProblemSpec& spec,
                                          const EquilibriumSolution& sol, int n,
                                          std::uint64_t seed) {
  const TimeGrid& grid = sol.p_flow.grid;
  const int m = spec.m;
  const int l = spec.control_dim();
  const Eigen::VectorXd span = spec.box.hi - spec.box.lo;

  std::vector<PolicySurface> grid_out;
  grid_out.push_back(sol.policy);

  auto constant_policy = [&](const Eigen::VectorXd& a) {
    PolicySurface ps;
    ps.grid = grid;
    ps.a.assign(grid.n_nodes(), a.transpose().replicate(m, 1));
    return ps;
  };
  auto shifted_policy = [&](double frac) {
    PolicySurface ps = sol.policy;
    for (auto& node : ps.a)
      for (int i = 0; i < m; ++i)
        node.row(i) = spec.box.clamp(node.row(i).transpose() + frac * span).transpose();
    return ps;
  };

  const int n_const = std::min(8, std::max(2, (n - 1) / 3));
  for (int c = 0; c < n_const && static_cast<int>(grid_out.size()) < n; ++c) {
    const double s = n_const == 1 ? 0.5 : static_cast<double>(c) / (n_const - 1);
    grid_out.push_back(constant_policy(spec.box.lo + s * span));
  }
  for (double frac : {0.1, -0.1, 0.25, -0.25, 0.5, -0.5, 0.75, -0.75}) {
    if (static_cast<int>(grid_out.size()) >= n) break;
    grid_out.push_back(shifted_policy(frac));
  }
  Rng rng(derive_seed(seed, 0xdef));
  while (static_cast<int>(grid_out.size()) < n) {
    Eigen::MatrixXd constant(m, l);
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < l; ++c) constant(i, c) = spec.box.lo(c) + rng.uniform() * span(c);
    PolicySurface ps;
    ps.grid = grid;
    ps.a.assign(grid.n_nodes(), constant);
    grid_out.push_back(std::move(ps));
  }
  grid_out.resize(n);
  return grid_out;
}

RateMatrix kron_generator(const std::vector<RateMatrix>& factors) {
  if (factors.size() < 2)
    throw std::invalid_argument("kron_generator: need at least two factors");
  long prod = 1;
  for (const auto& f : factors) {
    prod *= f.m;
    if (prod > 4096) throw std::invalid_argument("kron_generator: product dimension above 4096");
  }
  const int P = static_cast<int>(prod);

  RateMatrix out;
  out.m = P;
  out.entries = Eigen::MatrixXd::Zero(P, P);
  out.mask = Mask::Constant(P, P, false);

  // Strides of each factor within the row-major joint index.
  std::vector<int> stride(factors.size());
  int acc = 1;
  for (int n = static_cast<int>(factors.size()) - 1; n >= 0; --n) {
    stride[n] = acc;
    acc *= factors[n].m;
  }

  for (int idx = 0; idx < P; ++idx) {
    for (std::size_t n = 0; n < factors.size(); ++n) {
      const int mn = factors[n].m;
      const int in = (idx / stride[n]) % mn;
      for (int jn = 0; jn < mn; ++jn) {
        const int jdx = idx + (jn - in) * stride[n];
        out.entries(idx, jdx) += factors[n].entries(in, jn);
        if (jn != in && factors[n].mask(in, jn)) out.mask(idx, jdx) = true;
      }
    }
  }
  return out;
}

bool kron_psi_identity(const std::vector<int>& states, const Eigen::VectorXd& z_tilde, int m1,
                       int m2) {
  if (states.size() != 2)
    throw std::invalid_argument("kron_psi_identity: two factors expected");
  if (z_tilde.size() != static_cast<long>(m1) * m2)
    throw std::invalid_argument("kron_psi_identity: dimension mismatch");
  const int i1 = states[0], i2 = states[1];
  const RateMatrix joint =
      kron_generator({build_reference_generator(m1), build_reference_generator(m2)});
  const int joint_state = i1 * m2 + i2;
  const Eigen::MatrixXd psi = psi_matrix(joint_state, joint);
  const double lhs = z_tilde.dot(psi * z_tilde);

  Eigen::VectorXd z1(m1), z2(m2);
  for (int a = 0; a < m1; ++a) z1(a) = z_tilde(a * m2 + i2);
  for (int b = 0; b < m2; ++b) z2(b) = z_tilde(i1 * m2 + b);
  const double rhs = seminorm_sq(i1, z1) + seminorm_sq(i2, z2);
  return std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs));
}

}  // namespace mfg
