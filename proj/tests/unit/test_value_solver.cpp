#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "helpers.hpp"
#include "mfg/rng.hpp"
#include "mfg/value_solver.hpp"

using namespace mfg;

namespace {

struct Setup {
  ProblemSpec spec;
  TimeGrid grid;
  SimplexFlow p_flow;
  ControlFlow nu_flow;
};

Setup frozen_uniform(const ProblemSpec& spec, int n_steps) {
  Setup s{spec, TimeGrid(spec.T, n_steps), {}, {}};
  s.p_flow = SimplexFlow::constant(s.grid, spec.p_init);
  s.nu_flow = ControlFlow(s.grid, DiscreteMeasure::dirac(spec.box.midpoint()));
  return s;
}

PolicySurface constant_policy(const ProblemSpec& spec, const TimeGrid& grid, double a) {
  PolicySurface ps;
  ps.grid = grid;
  ps.a.assign(grid.n_nodes(), Eigen::MatrixXd::Constant(spec.m, spec.control_dim(), a));
  return ps;
}

}  // namespace

TEST_CASE("zero costs give a zero value surface and the standalone minimizer") {
  nlohmann::json j = test::quadratic2_json();
  j["family"]["f0"] = {{"type", "quadratic"}, {"gamma", 1.0}, {"center", {1.0}}};
  j["family"]["g"] = {{"type", "none"}};
  const Setup s = frozen_uniform(spec_from_json(j), 200);
  const ValueSolution sol = solve_value(s.spec, s.p_flow, s.nu_flow);
  CHECK(sol.value.V.cwiseAbs().maxCoeff() == 0.0);
  for (int k = 0; k < s.grid.n_nodes(); ++k)
    CHECK((sol.policy.a[k].array() - 1.0).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("constant running cost integrates to c(T - t)") {
  const double c = 0.8;
  nlohmann::json j = test::quadratic2_json();
  j["family"]["f0"] = {{"type", "quadratic"}, {"gamma", 1.0}, {"center", {1.0}}, {"offset", c}};
  j["family"]["g"] = {{"type", "none"}};
  const Setup s = frozen_uniform(spec_from_json(j), 250);
  const ValueSolution sol = solve_value(s.spec, s.p_flow, s.nu_flow);
  for (int k = 0; k < s.grid.n_nodes(); ++k) {
    const double expected = c * (s.spec.T - s.grid.node(k));
    CHECK(std::abs(sol.value.V(k, 0) - expected) <= 1e-12);
    CHECK(std::abs(sol.value.V(k, 1) - expected) <= 1e-12);
  }
}

TEST_CASE("value at the root matches a fine-grid reference") {
  const ProblemSpec spec = test::quadratic2_spec();
  const Setup coarse = frozen_uniform(spec, 1000);
  const ValueSolution sol = solve_value(spec, coarse.p_flow, coarse.nu_flow);

  const Setup fine = frozen_uniform(spec, 100000);  // dt = 1e-5
  const ValueSolution ref = solve_value(spec, fine.p_flow, fine.nu_flow);
  CHECK((sol.value.at_node(0) - ref.value.at_node(0)).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("unit running cost prices any policy at the horizon") {
  ProblemSpec spec = test::quadratic2_spec();
  spec.quad.reset();
  spec.f0 = [](double, int, const Eigen::VectorXd&, const Eigen::VectorXd&) { return 1.0; };
  spec.f0_grad = [](double, int, const Eigen::VectorXd& a, const Eigen::VectorXd&) {
    return Eigen::VectorXd::Zero(a.size()).eval();
  };
  spec.g = [](int, const Eigen::VectorXd&) { return 0.0; };
  const Setup s = frozen_uniform(spec, 300);
  for (double a : {0.1, 0.7, 2.0}) {
    const Eigen::VectorXd J =
        evaluate_policy_cost(spec, constant_policy(spec, s.grid, a), s.p_flow, s.nu_flow);
    CHECK((J.array() - spec.T).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("the solved policy prices back to the value surface") {
  const ProblemSpec spec = test::quadratic2_spec();
  const Setup s = frozen_uniform(spec, 1000);
  const ValueSolution sol = solve_value(spec, s.p_flow, s.nu_flow);
  const Eigen::VectorXd J = evaluate_policy_cost(spec, sol.policy, s.p_flow, s.nu_flow);
  CHECK((J - sol.value.at_node(0)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("perturbed policies never undercut the value") {
  const ProblemSpec spec = test::quadratic2_spec();
  const Setup s = frozen_uniform(spec, 500);
  const ValueSolution sol = solve_value(spec, s.p_flow, s.nu_flow);
  const Eigen::VectorXd v0 = sol.value.at_node(0);
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    PolicySurface cand = sol.policy;
    const double shift = 0.4 * (2.0 * rng.uniform() - 1.0);
    for (auto& node : cand.a)
      node = node.unaryExpr([&](double a) { return std::clamp(a + shift, 0.1, 2.0); });
    const Eigen::VectorXd J = evaluate_policy_cost(spec, cand, s.p_flow, s.nu_flow);
    CHECK((J - v0).minCoeff() >= -1e-10);
  }
}

TEST_CASE("martingale residual centers at zero and detects a corrupted surface") {
  const ProblemSpec spec = test::quadratic2_spec();
  const Setup s = frozen_uniform(spec, 1000);
  const ValueSolution sol = solve_value(spec, s.p_flow, s.nu_flow);

  const ResidualStats ok =
      martingale_residual(spec, sol.value, sol.policy, s.p_flow, s.nu_flow, 20000, 51);
  CHECK(std::abs(ok.mean) <= 3.0 * ok.se);

  ValueSurface wrong = sol.value;
  wrong.V *= 2.0;
  const ResidualStats bad =
      martingale_residual(spec, wrong, sol.policy, s.p_flow, s.nu_flow, 20000, 51);
  CHECK(std::abs(bad.mean) > 3.0 * bad.se);
}

TEST_CASE("worker count does not change Monte Carlo results") {
  const ProblemSpec spec = test::quadratic2_spec();
  const Setup s = frozen_uniform(spec, 300);
  const ValueSolution sol = solve_value(spec, s.p_flow, s.nu_flow);
  const ResidualStats one =
      martingale_residual(spec, sol.value, sol.policy, s.p_flow, s.nu_flow, 4000, 7, 1);
  const ResidualStats four =
      martingale_residual(spec, sol.value, sol.policy, s.p_flow, s.nu_flow, 4000, 7, 4);
  CHECK(one.mean == four.mean);
  CHECK(one.se == four.se);
}

TEST_CASE("degenerate model produces identically zero residuals") {
  nlohmann::json j = test::quadratic2_json();
  j["family"]["f0"] = {{"type", "quadratic"}, {"gamma", 1.0}, {"center", {1.0}}};
  j["family"]["g"] = {{"type", "none"}};
  const ProblemSpec spec = spec_from_json(j);
  const Setup s = frozen_uniform(spec, 100);
  const ValueSolution sol = solve_value(spec, s.p_flow, s.nu_flow);
  const ResidualStats stats =
      martingale_residual(spec, sol.value, sol.policy, s.p_flow, s.nu_flow, 500, 5);
  CHECK(stats.mean == 0.0);
  CHECK(stats.se == 0.0);
}

TEST_CASE("terminal-cost stability") {
  const ProblemSpec spec = test::quadratic2_spec();
  const Setup s = frozen_uniform(spec, 400);

  CHECK(stability_probe(spec, s.p_flow, s.nu_flow, 0.0, PerturbMode::ConstantShift) == 0.0);

  // A constant shift rides through unchanged: the driver only sees
  // differences of the value components.
  const double eps = 1e-3;
  CHECK(std::abs(stability_probe(spec, s.p_flow, s.nu_flow, eps, PerturbMode::ConstantShift) -
                 eps) <= 1e-12);

  // Linear response: halving epsilon halves the change.
  double prev = stability_probe(spec, s.p_flow, s.nu_flow, 1e-3, PerturbMode::Random, 9);
  const double bound = std::exp(2.0 * (spec.m - 1) * spec.C2 * spec.T);
  CHECK(prev <= bound * 1e-3);
  for (double e : {5e-4, 2.5e-4, 1.25e-4}) {
    const double cur = stability_probe(spec, s.p_flow, s.nu_flow, e, PerturbMode::Random, 9);
    const double ratio = cur / prev;
    CHECK(ratio >= 0.4);
    CHECK(ratio <= 0.6);
    prev = cur;
  }
}

TEST_CASE("raising the running cost raises the value") {
  nlohmann::json j = test::monotone2_json();
  const ProblemSpec base = spec_from_json(j);
  j["family"]["f0"] = {{"type", "quadratic"}, {"gamma", 1.0}, {"offset", 0.05}};
  const ProblemSpec raised = spec_from_json(j);
  const Setup s = frozen_uniform(base, 300);
  const ValueSolution v_base = solve_value(base, s.p_flow, s.nu_flow);
  const ValueSolution v_raised = solve_value(raised, s.p_flow, s.nu_flow);
  CHECK(((v_raised.value.V - v_base.value.V).array() >= -1e-12).all());
  CHECK((v_raised.value.V(0, 0) - v_base.value.V(0, 0)) > 1e-3);
}

TEST_CASE("a priori bound on the value surface") {
  const ProblemSpec spec = test::quadratic2_spec();
  const Setup s = frozen_uniform(spec, 400);
  const ValueSolution sol = solve_value(spec, s.p_flow, s.nu_flow);
  // sup |f| over the box (convex in alpha: corners suffice) and sup |g|.
  double f_sup = 0.0;
  for (double a : {0.1, 2.0}) f_sup = std::max(f_sup, 0.5 * a * a);
  const double g_sup = 1.0;
  CHECK(sol.value.V.cwiseAbs().maxCoeff() <= g_sup + spec.T * f_sup + 1e-12);
}

TEST_CASE("backward integrator shows fourth-order refinement") {
  // Smooth instance: interior minimizer throughout, rates bounded away from
  // the box edges.
  nlohmann::json j = test::quadratic2_json();
  j["control_box"] = {{-1.0}, {1.0}};
  j["rate_bounds"] = {0.5, 1.5};
  j["family"]["q"] = {{"type", "linear"}, {"q0", 1.0}, {"q1", 0.3}};
  j["family"]["g"] = {{"type", "vector"}, {"values", {0.0, 0.5}}};
  const ProblemSpec spec = spec_from_json(j);

  auto solve_at = [&](int n_steps) {
    const Setup s = frozen_uniform(spec, n_steps);
    return solve_value(spec, s.p_flow, s.nu_flow).value.at_node(0);
  };
  const Eigen::VectorXd v100 = solve_at(100);
  const Eigen::VectorXd v200 = solve_at(200);
  const Eigen::VectorXd v400 = solve_at(400);
  const Eigen::VectorXd v800 = solve_at(800);
  const double e1 = (v100 - v200).cwiseAbs().maxCoeff();
  const double e2 = (v200 - v400).cwiseAbs().maxCoeff();
  const double e3 = (v400 - v800).cwiseAbs().maxCoeff();
  CHECK(e1 / e2 >= 10.0);
  CHECK(e1 / e2 <= 24.0);
  CHECK(e2 / e3 >= 10.0);
  CHECK(e2 / e3 <= 24.0);
}
