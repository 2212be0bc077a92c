#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"
#include "mfg/likelihood.hpp"
#include "mfg/nplayer.hpp"
#include "mfg/rng.hpp"

using namespace mfg;

namespace {

EquilibriumSolution solved_monotone(int n_steps) {
  static std::map<int, EquilibriumSolution> cache;
  auto it = cache.find(n_steps);
  if (it == cache.end()) {
    const ProblemSpec spec = test::monotone2_spec();
    it = cache.emplace(n_steps, picard_solve(spec, TimeGrid(spec.T, n_steps), PicardOptions{}))
             .first;
    REQUIRE(it->second.converged);
  }
  return it->second;
}

}  // namespace

TEST_CASE("single player empirical flow is a vertex path") {
  const ProblemSpec spec = test::monotone2_spec();
  const EquilibriumSolution sol = solved_monotone(200);
  const NPlayerRun run = simulate_nplayer(spec, sol, 1, 5);
  for (int k = 0; k < run.empirical_p.grid.n_nodes(); ++k) {
    const Eigen::RowVector2d row = run.empirical_p.values.row(k);
    CHECK(row.maxCoeff() == 1.0);
    CHECK(row.minCoeff() == 0.0);
  }
}

TEST_CASE("fixed seed reproduces the run bit for bit") {
  const ProblemSpec spec = test::monotone2_spec();
  const EquilibriumSolution sol = solved_monotone(200);
  const NPlayerRun a = simulate_nplayer(spec, sol, 64, 77);
  const NPlayerRun b = simulate_nplayer(spec, sol, 64, 77);
  REQUIRE(a.paths.size() == b.paths.size());
  for (std::size_t n = 0; n < a.paths.size(); ++n) {
    CHECK(a.paths[n].initial_state == b.paths[n].initial_state);
    REQUIRE(a.paths[n].jumps.size() == b.paths[n].jumps.size());
    for (std::size_t j = 0; j < a.paths[n].jumps.size(); ++j)
      CHECK(a.paths[n].jumps[j].time == b.paths[n].jumps[j].time);
  }
  CHECK((a.empirical_p.values - b.empirical_p.values).cwiseAbs().maxCoeff() == 0.0);

  // The stored empirical flow is exactly the per-node state frequency.
  const TimeGrid& grid = a.empirical_p.grid;
  for (int node : {0, grid.n_steps / 2, grid.n_steps}) {
    std::vector<int> states;
    for (const auto& path : a.paths) states.push_back(path.state_at(grid.node(node)));
    const SimplexPoint freq = empirical_states(states, 2);
    CHECK((a.empirical_p.values.row(node).transpose() - freq.w).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("large populations hug the mean field flow") {
  const ProblemSpec spec = test::monotone2_spec();
  const EquilibriumSolution sol = solved_monotone(200);
  const NPlayerRun run = simulate_nplayer(spec, sol, 10000, 11);
  double worst = 0.0;
  for (int k = 0; k < run.empirical_p.grid.n_nodes(); ++k)
    worst = std::max(worst,
                     (run.empirical_p.values.row(k) - sol.p_flow.values.row(k)).norm());
  CHECK(worst <= 0.05);
}

TEST_CASE("mean-field-dependent rates are rejected in finite-player mode") {
  ProblemSpec spec = test::monotone2_spec();
  spec.flags.mean_field_in_q = true;
  const EquilibriumSolution sol = solved_monotone(200);
  CHECK_THROWS_AS(simulate_nplayer(spec, sol, 4, 1), std::invalid_argument);
}

TEST_CASE("independent chains never share a jump time") {
  const ProblemSpec spec = test::monotone2_spec();
  const EquilibriumSolution sol = solved_monotone(200);
  const NPlayerRun run = simulate_nplayer(spec, sol, 512, 3);
  std::set<double> times;
  std::size_t total = 0;
  for (const auto& p : run.paths) {
    for (const auto& j : p.jumps) times.insert(j.time);
    total += p.jumps.size();
  }
  CHECK(times.size() == total);
}

TEST_CASE("pooled per-player marginals match the mean field") {
  const ProblemSpec spec = test::monotone2_spec();
  const EquilibriumSolution sol = solved_monotone(200);
  const int N = 200, reps = 20;
  for (int node : {50, 120, 200}) {
    double count = 0.0;
    for (int r = 0; r < reps; ++r) {
      const NPlayerRun run = simulate_nplayer(spec, sol, N, derive_seed(900, r));
      count += run.empirical_p.values(node, 0) * N;
    }
    const double pooled = count / (N * reps);
    const double target = sol.p_flow.values(node, 0);
    const double se = std::sqrt(target * (1.0 - target) / (N * reps));
    CHECK(std::abs(pooled - target) <= 3.5 * se);
  }
}

TEST_CASE("chaos statistics respect the finite-sample bound") {
  const ProblemSpec spec = test::monotone2_spec();
  const EquilibriumSolution sol = solved_monotone(200);
  const ChaosReport rep = chaos_error(spec, sol, {8, 32, 128}, 24, 41);
  REQUIRE(rep.rows.size() == 3);
  for (const auto& row : rep.rows) {
    CHECK(row.mse_state <= row.bound + 3.0 * row.se_state);
    CHECK(row.mse_w1 > 0.0);
    CHECK(row.sup_mse_state >= row.mse_state);
  }
  CHECK(rep.state_slope <= -0.5);
  CHECK(rep.state_slope >= -1.6);
  CHECK(rep.control_slope <= -0.4);
}

TEST_CASE("deviating to the equilibrium policy is free, corners cost") {
  const ProblemSpec spec = test::monotone2_spec();
  const EquilibriumSolution sol = solved_monotone(200);

  std::vector<PolicySurface> deviations;
  deviations.push_back(sol.policy);
  PolicySurface corner;
  corner.grid = sol.p_flow.grid;
  corner.a.assign(corner.grid.n_nodes(), Eigen::MatrixXd::Constant(2, 1, 2.0));
  deviations.push_back(corner);

  const DeviationReport rep = deviation_gain(spec, sol, 32, deviations, 96, 13);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].gain == 0.0);  // common random numbers: identical paths
  CHECK(rep.rows[0].se == 0.0);
  CHECK(rep.rows[1].gain > 3.0 * rep.rows[1].se);
}

TEST_CASE("deviation grid has the advertised shape") {
  const ProblemSpec spec = test::monotone2_spec();
  const EquilibriumSolution sol = solved_monotone(200);
  const auto grid = deviation_grid(spec, sol, 25, 99);
  CHECK(grid.size() == 25);
  // First candidate is the solved policy itself.
  CHECK((grid[0].a[0] - sol.policy.a[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("profile likelihood ratios have a bounded second moment") {
  const ProblemSpec spec = test::monotone2_spec();
  const EquilibriumSolution sol = solved_monotone(200);
  const RateFn base = policy_rate_fn(spec, sol.policy, sol.p_flow, sol.nu_flow);
  PolicySurface corner;
  corner.grid = sol.p_flow.grid;
  corner.a.assign(corner.grid.n_nodes(), Eigen::MatrixXd::Constant(2, 1, 2.0));
  const PathLikelihoodField base_field(spec, sol.policy, sol.p_flow, sol.nu_flow);
  const PathLikelihoodField dev_field(spec, corner, sol.p_flow, sol.nu_flow);

  const int n = 4000;
  double sum_sq = 0.0;
  for (int k = 0; k < n; ++k) {
    Rng rng(derive_seed(450, k));
    const PathRecord p = simulate_path(base, spec.p_init, spec.T, spec.max_exit_rate(), rng);
    const double log_ratio =
        dev_field.log_likelihood(p).log_total() - base_field.log_likelihood(p).log_total();
    const double w = std::exp(log_ratio);
    sum_sq += w * w;
  }
  // Pinned empirical ceiling for this model family: the corner policy sits a
  // factor 20 above the clamped equilibrium rate, so per-jump ratios reach
  // log(2/0.1). Measured ~256 at this seed; pinned with headroom.
  CHECK(sum_sq / n <= 400.0);
}

TEST_CASE("joint generator of independent factors") {
  const RateMatrix Q2 = build_reference_generator(2);
  const RateMatrix joint = kron_generator({Q2, Q2});
  Eigen::MatrixXd expected(4, 4);
  expected << -2, 1, 1, 0, 1, -2, 0, 1, 1, 0, -2, 1, 0, 1, 1, -2;
  CHECK((joint.entries - expected).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 4; ++i) CHECK(joint.entries.row(i).sum() == 0.0);

  CHECK_THROWS_AS(kron_generator({Q2}), std::invalid_argument);
  const RateMatrix big = build_reference_generator(17);
  CHECK_THROWS_AS(kron_generator({big, big, big}), std::invalid_argument);
}

TEST_CASE("joint generator matches the brute-force oracle") {
  for (int m1 : {2, 3, 4}) {
    for (int m2 : {2, 3, 4}) {
      const RateMatrix A = build_reference_generator(m1);
      const RateMatrix B = build_reference_generator(m2);
      const RateMatrix joint = kron_generator({A, B});
      // Oracle: enumerate product states; moves change exactly one factor.
      const int P = m1 * m2;
      Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(P, P);
      for (int i1 = 0; i1 < m1; ++i1)
        for (int i2 = 0; i2 < m2; ++i2) {
          const int row = i1 * m2 + i2;
          for (int j1 = 0; j1 < m1; ++j1)
            if (j1 != i1) oracle(row, j1 * m2 + i2) = A.entries(i1, j1);
          for (int j2 = 0; j2 < m2; ++j2)
            if (j2 != i2) oracle(row, i1 * m2 + j2) = B.entries(i2, j2);
          oracle(row, row) = -oracle.row(row).sum();
        }
      CHECK((joint.entries - oracle).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("joint seminorm splits across factors") {
  Rng rng(314);
  for (int m1 : {2, 3, 4}) {
    for (int m2 : {2, 3, 4}) {
      for (int trial = 0; trial < 12; ++trial) {
        Eigen::VectorXd z(m1 * m2);
        for (int k = 0; k < z.size(); ++k) z(k) = 2.0 * rng.uniform() - 1.0;
        const int i1 = static_cast<int>(rng.uniform() * m1);
        const int i2 = static_cast<int>(rng.uniform() * m2);
        CHECK(kron_psi_identity({i1, i2}, z, m1, m2));
      }
      CHECK(kron_psi_identity({0, 0}, Eigen::VectorXd::Zero(m1 * m2), m1, m2));
      CHECK(kron_psi_identity({m1 - 1, 0}, Eigen::VectorXd::Constant(m1 * m2, 0.7), m1, m2));
    }
  }
}
