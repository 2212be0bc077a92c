#include "mfg/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "mfg/ctmc.hpp"
#include "mfg/io.hpp"
#include "mfg/likelihood.hpp"
#include "mfg/nplayer.hpp"
#include "mfg/parallel.hpp"
#include "mfg/rng.hpp"
#include "mfg/value_solver.hpp"

namespace mfg {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

void write_manifest(const ScenarioConfig& cfg, const std::string& command,
                    std::vector<std::string> outputs) {
  std::sort(outputs.begin(), outputs.end());
  json manifest;
  manifest["command"] = command;
  manifest["config_hash"] = fnv1a_hex(cfg.raw.dump());
  manifest["seed"] = cfg.seed;
  manifest["version"] = kVersion;
  manifest["outputs"] = outputs;
  write_file(cfg.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<std::string> policy_headers(int m, int l) {
  std::vector<std::string> h;
  for (int i = 0; i < m; ++i) {
    if (l == 1) {
      h.push_back("alpha_" + std::to_string(i + 1));
    } else {
      for (int c = 0; c < l; ++c)
        h.push_back("alpha_" + std::to_string(i + 1) + "_" + std::to_string(c + 1));
    }
  }
  return h;
}

void write_equilibrium_csv(const ScenarioConfig& cfg, const EquilibriumSolution& sol) {
  const int m = cfg.spec.m, l = cfg.spec.control_dim();
  std::vector<std::string> header{"t"};
  for (int i = 0; i < m; ++i) header.push_back("p_" + std::to_string(i + 1));
  for (const auto& h : policy_headers(m, l)) header.push_back(h);
  CsvWriter csv(header);
  for (int k = 0; k < cfg.grid.n_nodes(); ++k) {
    std::vector<double> row{cfg.grid.node(k)};
    for (int i = 0; i < m; ++i) row.push_back(sol.p_flow.values(k, i));
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < l; ++c) row.push_back(sol.policy.a[k](i, c));
    csv.row(row);
  }
  csv.save(cfg.out_dir / "equilibrium.csv");
}

void write_value_csv(const ScenarioConfig& cfg, const EquilibriumSolution& sol) {
  CsvWriter csv({"t", "state", "V"});
  for (int k = 0; k < cfg.grid.n_nodes(); ++k)
    for (int i = 0; i < cfg.spec.m; ++i)
      csv.row({cfg.grid.node(k), static_cast<double>(i + 1), sol.value.V(k, i)});
  csv.save(cfg.out_dir / "value.csv");
}

void write_policy_csv(const ScenarioConfig& cfg, const EquilibriumSolution& sol) {
  std::vector<std::string> header{"t", "state"};
  for (int c = 0; c < cfg.spec.control_dim(); ++c)
    header.push_back("alpha_" + std::to_string(c + 1));
  CsvWriter csv(header);
  for (int k = 0; k < cfg.grid.n_nodes(); ++k)
    for (int i = 0; i < cfg.spec.m; ++i) {
      std::vector<double> row{cfg.grid.node(k), static_cast<double>(i + 1)};
      for (int c = 0; c < cfg.spec.control_dim(); ++c) row.push_back(sol.policy.a[k](i, c));
      csv.row(row);
    }
  csv.save(cfg.out_dir / "policy.csv");
}

void write_trace_csv(const ScenarioConfig& cfg, const EquilibriumSolution& sol) {
  CsvWriter csv({"iter", "state_res", "control_res"});
  for (const auto& it : sol.trace)
    csv.row({static_cast<double>(it.iter), it.state_res, it.control_res});
  csv.save(cfg.out_dir / "trace.csv");
}

EquilibriumSolution solve_pipeline(const ScenarioConfig& cfg) {
  return picard_solve(cfg.spec, cfg.grid, cfg.solver);
}

}  // namespace

ScenarioConfig load_scenario(const std::filesystem::path& config_path,
                             const CliOverrides& overrides) {
  ScenarioConfig cfg;
  json raw;
  try {
    raw = json::parse(read_file(config_path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: JSON parse error: " + std::string(e.what()));
  }
  cfg.raw = raw;
  cfg.spec = spec_from_json(raw);
  cfg.seed = overrides.seed.value_or(cfg.spec.seed);
  cfg.spec.seed = cfg.seed;

  const SpecReport structural = validate_spec(cfg.spec, 200, cfg.seed);
  if (!structural.ok())
    throw std::invalid_argument("config: structural validation failed: " +
                                structural.violations.front().what + " (value " +
                                fmt_double(structural.violations.front().value) + ")");

  int n_steps = 1000;
  if (raw.contains("grid") && raw["grid"].contains("n_steps"))
    n_steps = raw["grid"]["n_steps"].get<int>();
  if (n_steps < 1) throw std::invalid_argument("config: missing or malformed field 'grid.n_steps'");
  cfg.grid = TimeGrid(cfg.spec.T, n_steps);

  if (raw.contains("solver")) {
    const json& s = raw["solver"];
    if (s.contains("damping")) cfg.solver.damping = s["damping"].get<double>();
    if (s.contains("tol")) cfg.solver.tol = s["tol"].get<double>();
    if (s.contains("max_iter")) cfg.solver.max_iter = s["max_iter"].get<int>();
  }
  if (raw.contains("mc") && raw["mc"].contains("n_paths"))
    cfg.mc_paths = raw["mc"]["n_paths"].get<int>();

  if (raw.contains("nplayer")) {
    const json& np = raw["nplayer"];
    if (np.contains("N_list")) cfg.chaos_N_list = np["N_list"].get<std::vector<int>>();
    if (np.contains("reps")) cfg.chaos_reps = np["reps"].get<int>();
    if (np.contains("deviation_N_values"))
      cfg.deviation_N_values = np["deviation_N_values"].get<std::vector<int>>();
    if (np.contains("n_deviations")) cfg.n_deviations = np["n_deviations"].get<int>();
    if (np.contains("deviation_n_mc")) cfg.deviation_n_mc = np["deviation_n_mc"].get<int>();
  }

  cfg.likelihood_alpha = cfg.spec.box.midpoint();
  cfg.likelihood_t = cfg.spec.T;
  if (raw.contains("likelihood")) {
    const json& lk = raw["likelihood"];
    if (lk.contains("alpha")) {
      if (lk["alpha"].is_number()) {
        cfg.likelihood_alpha = Eigen::VectorXd::Constant(1, lk["alpha"].get<double>());
      } else {
        const auto vals = lk["alpha"].get<std::vector<double>>();
        cfg.likelihood_alpha =
            Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
      }
    }
    if (lk.contains("t")) cfg.likelihood_t = lk["t"].get<double>();
  }

  if (raw.contains("outputs")) cfg.out_dir = raw["outputs"].get<std::string>();
  if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
  if (overrides.threads) cfg.threads = *overrides.threads;
  return cfg;
}

int cmd_solve(const ScenarioConfig& cfg) {
  const EquilibriumSolution sol = solve_pipeline(cfg);
  write_equilibrium_csv(cfg, sol);
  write_value_csv(cfg, sol);
  write_policy_csv(cfg, sol);
  write_trace_csv(cfg, sol);
  write_manifest(cfg, "solve",
                 {"equilibrium.csv", "value.csv", "policy.csv", "trace.csv", "manifest.json"});
  return sol.converged ? 0 : 2;
}

int cmd_simulate(const ScenarioConfig& cfg) {
  const EquilibriumSolution sol = solve_pipeline(cfg);
  const RateFn rates = policy_rate_fn(cfg.spec, sol.policy, sol.p_flow, sol.nu_flow);

  // Counts are integer-valued, so the merge is exact in any order and the
  // output cannot depend on the worker count.
  const int chunks = std::max(1, cfg.threads);
  const int per_chunk = (cfg.mc_paths + chunks - 1) / chunks;
  std::vector<Eigen::MatrixXd> local(
      chunks, Eigen::MatrixXd::Zero(cfg.grid.n_nodes(), cfg.spec.m));
  parallel_for(chunks, cfg.threads, [&](int c) {
    const int begin = c * per_chunk;
    const int end = std::min(cfg.mc_paths, begin + per_chunk);
    for (int idx = begin; idx < end; ++idx) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(idx)));
      const PathRecord path =
          simulate_path(rates, cfg.spec.p_init, cfg.spec.T, cfg.spec.max_exit_rate(), rng);
      const auto nodes = states_at_nodes(path, cfg.grid);
      for (int k = 0; k < cfg.grid.n_nodes(); ++k) local[c](k, nodes[k]) += 1.0;
    }
  });
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(cfg.grid.n_nodes(), cfg.spec.m);
  for (const auto& part : local) counts += part;

  const int n_sample = std::min(10, cfg.mc_paths);
  std::vector<PathRecord> sample(n_sample);
  for (int idx = 0; idx < n_sample; ++idx) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(idx)));
    sample[idx] =
        simulate_path(rates, cfg.spec.p_init, cfg.spec.T, cfg.spec.max_exit_rate(), rng);
  }

  std::vector<std::string> header{"t"};
  for (int i = 0; i < cfg.spec.m; ++i) header.push_back("p_model_" + std::to_string(i + 1));
  for (int i = 0; i < cfg.spec.m; ++i) header.push_back("p_emp_" + std::to_string(i + 1));
  CsvWriter csv(header);
  for (int k = 0; k < cfg.grid.n_nodes(); ++k) {
    std::vector<double> row{cfg.grid.node(k)};
    for (int i = 0; i < cfg.spec.m; ++i) row.push_back(sol.p_flow.values(k, i));
    for (int i = 0; i < cfg.spec.m; ++i) row.push_back(counts(k, i) / cfg.mc_paths);
    csv.row(row);
  }
  csv.save(cfg.out_dir / "marginals.csv");

  CsvWriter paths_csv({"path_id", "time", "state"});
  for (int s = 0; s < n_sample; ++s) {
    paths_csv.row({static_cast<double>(s), 0.0, static_cast<double>(sample[s].initial_state)});
    for (const auto& j : sample[s].jumps)
      paths_csv.row({static_cast<double>(s), j.time, static_cast<double>(j.state)});
  }
  paths_csv.save(cfg.out_dir / "paths_sample.csv");

  write_manifest(cfg, "simulate", {"marginals.csv", "paths_sample.csv", "manifest.json"});
  return sol.converged ? 0 : 2;
}

int cmd_evaluate_cost(const ScenarioConfig& cfg) {
  const EquilibriumSolution sol = solve_pipeline(cfg);
  const Eigen::VectorXd J = evaluate_policy_cost(cfg.spec, sol.policy, sol.p_flow, sol.nu_flow);
  const Eigen::VectorXd V0 = sol.value.at_node(0);

  json out;
  out["J"] = vec_to_json(J);
  out["V"] = vec_to_json(V0);
  out["total_J"] = cfg.spec.p_init.w.dot(J);
  out["total_V"] = cfg.spec.p_init.w.dot(V0);
  out["max_abs_diff"] = (J - V0).cwiseAbs().maxCoeff();
  out["converged"] = sol.converged;
  write_file(cfg.out_dir / "cost.json", out.dump(2) + "\n");
  write_manifest(cfg, "evaluate-cost", {"cost.json", "manifest.json"});
  return sol.converged ? 0 : 2;
}

int cmd_verify_equilibrium(const ScenarioConfig& cfg) {
  const EquilibriumSolution sol = solve_pipeline(cfg);
  const auto [state_res, control_res] = consistency_residual(cfg.spec, sol);
  const BestResponseReport br = best_response_gap(cfg.spec, sol, 50, derive_seed(cfg.seed, 0xb5));
  const ResidualStats mres =
      martingale_residual(cfg.spec, sol.value, sol.policy, sol.p_flow, sol.nu_flow, cfg.mc_paths,
                          derive_seed(cfg.seed, 0x3a), cfg.threads);

  json out;
  out["converged"] = sol.converged;
  out["state_res"] = state_res;
  out["control_res"] = control_res;
  out["best_response"] = {{"gap", br.gap}, {"n_candidates", br.n_candidates}};
  out["martingale"] = {{"mean", mres.mean},
                       {"se", mres.se},
                       {"n_paths", mres.n_paths},
                       {"seed", cfg.seed},
                       {"within_3se", std::abs(mres.mean) <= 3.0 * mres.se}};
  write_file(cfg.out_dir / "verification.json", out.dump(2) + "\n");
  write_manifest(cfg, "verify-equilibrium", {"verification.json", "manifest.json"});
  return sol.converged ? 0 : 2;
}

int cmd_nplayer(const ScenarioConfig& cfg) {
  const EquilibriumSolution sol = solve_pipeline(cfg);

  const ChaosReport chaos = chaos_error(cfg.spec, sol, cfg.chaos_N_list, cfg.chaos_reps,
                                        derive_seed(cfg.seed, 0xc4a05), cfg.threads);
  CsvWriter chaos_csv(
      {"N", "mse_state", "se_state", "mse_w1", "se_w1", "bound_m_over_4N", "sup_mse_state"});
  for (const auto& row : chaos.rows)
    chaos_csv.row({static_cast<double>(row.N), row.mse_state, row.se_state, row.mse_w1, row.se_w1,
                   row.bound, row.sup_mse_state});
  chaos_csv.save(cfg.out_dir / "chaos.csv");

  const std::vector<PolicySurface> deviations =
      deviation_grid(cfg.spec, sol, cfg.n_deviations, cfg.seed);
  CsvWriter dev_csv({"deviation_id", "gain", "se", "N"});
  json summary;
  summary["state_slope"] = chaos.state_slope;
  summary["control_slope"] = chaos.control_slope;
  json profits = json::object();
  for (int N : cfg.deviation_N_values) {
    const DeviationReport rep =
        deviation_gain(cfg.spec, sol, N, deviations, cfg.deviation_n_mc,
                       derive_seed(cfg.seed, 0xde7), cfg.threads);
    for (const auto& row : rep.rows)
      dev_csv.row({static_cast<double>(row.id), row.gain, row.se, static_cast<double>(N)});
    profits["N" + std::to_string(N)] = rep.max_profit;
  }
  summary["max_profit"] = profits;
  dev_csv.save(cfg.out_dir / "deviations.csv");
  write_file(cfg.out_dir / "nplayer.json", summary.dump(2) + "\n");

  write_manifest(cfg, "nplayer",
                 {"chaos.csv", "deviations.csv", "nplayer.json", "manifest.json"});
  return sol.converged ? 0 : 2;
}

int cmd_check_monotone(const ScenarioConfig& cfg) {
  const MonotoneReport rep = check_monotonicity(cfg.spec, 500, cfg.seed);
  json out;
  out["g_monotone"] = rep.g_monotone;
  out["f1_monotone"] = rep.f1_monotone;
  out["n_witnesses"] = rep.witnesses.size();
  json ws = json::array();
  for (std::size_t i = 0; i < rep.witnesses.size() && i < 5; ++i) {
    const auto& w = rep.witnesses[i];
    ws.push_back({{"which", w.which},
                  {"t", w.t},
                  {"value", w.value},
                  {"p", vec_to_json(w.p)},
                  {"p_prime", vec_to_json(w.p_prime)}});
  }
  out["witnesses"] = ws;
  write_file(cfg.out_dir / "monotone.json", out.dump(2) + "\n");
  write_manifest(cfg, "check-monotone", {"monotone.json", "manifest.json"});
  return 0;  // report commands always succeed
}

int cmd_likelihood_check(const ScenarioConfig& cfg) {
  // Constant-control three-way marginal comparison.
  RateMatrix Q;
  Q.m = cfg.spec.m;
  Q.mask = cfg.spec.Qref.mask;
  Q.entries = Eigen::MatrixXd::Zero(Q.m, Q.m);
  for (int i = 0; i < Q.m; ++i) {
    const Eigen::VectorXd row =
        cfg.spec.rate_row(0.0, i, cfg.likelihood_alpha, cfg.spec.p_init.w);
    Q.entries.row(i) = row;
    Q.entries(i, i) = -row.sum();
  }
  const ConsistencyReport consistency =
      measure_consistency(Q, cfg.spec.Qref, cfg.spec.p_init, cfg.likelihood_t, cfg.mc_paths,
                          derive_seed(cfg.seed, 1), cfg.threads);

  // Importance-sampled equilibrium cost against the backward-equation value.
  const EquilibriumSolution sol = solve_pipeline(cfg);
  const McEstimate imp = importance_cost(cfg.spec, sol.policy, sol.p_flow, sol.nu_flow,
                                         cfg.mc_paths, derive_seed(cfg.seed, 2), cfg.threads);
  const Eigen::VectorXd J = evaluate_policy_cost(cfg.spec, sol.policy, sol.p_flow, sol.nu_flow);

  json out;
  out["consistency"] = {{"pass", consistency.pass},
                        {"max_discrepancy", consistency.max_discrepancy},
                        {"reweighted", vec_to_json(consistency.reweighted)},
                        {"direct", vec_to_json(consistency.direct)},
                        {"closed_form", vec_to_json(consistency.closed_form)}};
  out["importance"] = {{"estimate", imp.estimate},
                       {"se", imp.se},
                       {"n_paths", imp.n_paths},
                       {"seed", imp.seed}};
  out["mean_weight"] = imp.mean_weight;
  out["weight_se"] = imp.weight_se;
  out["ode_total_cost"] = cfg.spec.p_init.w.dot(J);
  write_file(cfg.out_dir / "likelihood.json", out.dump(2) + "\n");
  write_manifest(cfg, "likelihood-check", {"likelihood.json", "manifest.json"});
  return sol.converged ? 0 : 2;
}

}  // namespace mfg
