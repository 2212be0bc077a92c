#include "mfg/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfg/parallel.hpp"
#include "mfg/rng.hpp"

namespace mfg {

double LikelihoodBreakdown::log_total() const {
  if (impossible) return -std::numeric_limits<double>::infinity();
  return log_drift + log_jumps;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 24);
}

}  // namespace

LikelihoodBreakdown log_likelihood(const PathRecord& path, const RateFn& rates,
                                   const RateMatrix& Q0, const std::vector<double>& breaks) {
  LikelihoodBreakdown out;

  auto drift_piece = [&](double a, double b, int s) {
    if (b <= a) return;
    const double q0_diag = Q0.entries(s, s);
    auto gap = [&](double t) {
      Eigen::VectorXd r = rates(t, s);
      r(s) = 0.0;
      return -r.sum() - q0_diag;
    };
    // Split at the supplied non-smoothness points, then integrate adaptively.
    double lo = a;
    for (double brk : breaks) {
      if (brk <= lo || brk >= b) continue;
      out.log_drift += integrate(gap, lo, brk, 1e-13);
      lo = brk;
    }
    out.log_drift += integrate(gap, lo, b, 1e-13);
  };

  double seg_start = 0.0;
  int state = path.initial_state;
  for (const auto& jump : path.jumps) {
    drift_piece(seg_start, jump.time, state);
    const double q0 = Q0.entries(state, jump.state);
    const Eigen::VectorXd r = rates(jump.time, state);
    const double q = r(jump.state);
    if (q0 <= 0.0 || q <= 0.0) {
      out.impossible = true;
    } else {
      out.log_jumps += std::log(q / q0);
    }
    seg_start = jump.time;
    state = jump.state;
  }
  drift_piece(seg_start, path.horizon, state);
  return out;
}

PathLikelihoodField::PathLikelihoodField(const ProblemSpec& spec, const PolicySurface& policy,
                                         const SimplexFlow& p_flow, const ControlFlow& nu_flow)
    : spec_(spec), policy_(policy), p_flow_(p_flow), nu_flow_(nu_flow) {
  const TimeGrid& grid = p_flow.grid;
  prefix_ = Eigen::MatrixXd::Zero(grid.n_nodes(), spec.m);
  for (int k = 0; k < grid.n_steps; ++k)
    for (int i = 0; i < spec.m; ++i)
      prefix_(k + 1, i) = prefix_(k, i) + piece(grid.node(k), grid.node(k + 1), k, i);
}

double PathLikelihoodField::piece(double u, double v, int cell, int state) const {
  if (v <= u) return 0.0;
  const Eigen::VectorXd alpha = policy_.a[cell].row(state);
  const DiscreteMeasure& nu = nu_flow_.at_node(cell);
  const double q0_diag = spec_.Qref.entries(state, state);
  auto gap = [&](double t) {
    return -spec_.rate_row(t, state, alpha, p_flow_.at(t), &nu).sum() - q0_diag;
  };
  const double mid = 0.5 * (u + v);
  return (v - u) / 6.0 * (gap(u) + 4.0 * gap(mid) + gap(v));
}

LikelihoodBreakdown PathLikelihoodField::log_likelihood(const PathRecord& path) const {
  const TimeGrid& grid = p_flow_.grid;
  LikelihoodBreakdown out;
  auto drift_segment = [&](double a, double b, int s) {
    if (b <= a) return;
    const int ca = grid.cell_left(a);
    const int cb = grid.cell_left(b);
    if (ca == cb) {
      out.log_drift += piece(a, b, ca, s);
      return;
    }
    out.log_drift += piece(a, grid.node(ca + 1), ca, s);
    out.log_drift += prefix_(cb, s) - prefix_(ca + 1, s);
    out.log_drift += piece(grid.node(cb), b, cb, s);
  };
  double seg_start = 0.0;
  int state = path.initial_state;
  for (const auto& jump : path.jumps) {
    drift_segment(seg_start, jump.time, state);
    const double q0 = spec_.Qref.entries(state, jump.state);
    const Eigen::VectorXd alpha = policy_.at_left(jump.time, state);
    const DiscreteMeasure& nu = nu_flow_.at_left(jump.time);
    const double q =
        spec_.rate(jump.time, state, jump.state, alpha, p_flow_.at(jump.time), &nu);
    if (q0 <= 0.0 || q <= 0.0) {
      out.impossible = true;
    } else {
      out.log_jumps += std::log(q / q0);
    }
    seg_start = jump.time;
    state = jump.state;
  }
  drift_segment(seg_start, path.horizon, state);
  return out;
}

McEstimate importance_cost(const ProblemSpec& spec, const PolicySurface& policy,
                           const SimplexFlow& p_flow, const ControlFlow& nu_flow, int n_paths,
                           std::uint64_t seed, int threads) {
  if (n_paths < 100)
    throw std::invalid_argument("importance_cost: need at least 100 paths");
  const RateFn reference = rate_fn_of(spec.Qref);
  const PathLikelihoodField field(spec, policy, p_flow, nu_flow);
  const PathCostIntegrator integ(spec, policy, p_flow, nu_flow);
  const double ref_exit = spec.Qref.entries.diagonal().cwiseAbs().maxCoeff();

  std::vector<double> log_w(n_paths), cost(n_paths);
  parallel_for(n_paths, threads, [&](int idx) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(idx)));
    const PathRecord path = simulate_path(reference, spec.p_init, spec.T, ref_exit, rng);
    log_w[idx] = field.log_likelihood(path).log_total();
    cost[idx] = integ.total_cost(path);
  });

  // Max-log shift keeps the exponentials tame; the estimate is scaled back.
  double shift = -std::numeric_limits<double>::infinity();
  for (double lw : log_w) shift = std::max(shift, lw);
  if (!std::isfinite(shift)) shift = 0.0;

  double sum_wc = 0.0, sum_w = 0.0;
  std::vector<double> wc(n_paths), w(n_paths);
  for (int i = 0; i < n_paths; ++i) {
    w[i] = std::isfinite(log_w[i]) ? std::exp(log_w[i] - shift) : 0.0;
    wc[i] = w[i] * cost[i];
    sum_w += w[i];
    sum_wc += wc[i];
  }
  const double scale = std::exp(shift);
  const double mean_wc = sum_wc / n_paths, mean_w = sum_w / n_paths;
  double ss_wc = 0.0, ss_w = 0.0;
  for (int i = 0; i < n_paths; ++i) {
    ss_wc += (wc[i] - mean_wc) * (wc[i] - mean_wc);
    ss_w += (w[i] - mean_w) * (w[i] - mean_w);
  }
  McEstimate est;
  est.n_paths = n_paths;
  est.seed = seed;
  est.estimate = scale * mean_wc;
  est.se = scale * std::sqrt(ss_wc / (n_paths - 1.0) / n_paths);
  est.mean_weight = scale * mean_w;
  est.weight_se = scale * std::sqrt(ss_w / (n_paths - 1.0) / n_paths);
  return est;
}

ConsistencyReport measure_consistency(const RateMatrix& Q, const RateMatrix& Q0,
                                      const SimplexPoint& p0, double t, int n_paths,
                                      std::uint64_t seed, int threads) {
  const int m = Q.m;
  ConsistencyReport rep;
  rep.reweighted = Eigen::VectorXd::Zero(m);
  rep.reweighted_se = Eigen::VectorXd::Zero(m);
  rep.direct = Eigen::VectorXd::Zero(m);
  rep.direct_se = Eigen::VectorXd::Zero(m);

  const double horizon = std::max(t, 1e-12);
  const RateFn ref_rates = rate_fn_of(Q0);
  const RateFn ctl_rates = rate_fn_of(Q);
  const double ref_exit = Q0.entries.diagonal().cwiseAbs().maxCoeff();
  const double ctl_exit = Q.entries.diagonal().cwiseAbs().maxCoeff();

  // Leg A: reference simulation reweighted by the likelihood at time t.
  std::vector<double> w(n_paths);
  std::vector<int> state_a(n_paths);
  parallel_for(n_paths, threads, [&](int idx) {
    Rng rng(derive_seed(seed, 1, static_cast<std::uint64_t>(idx)));
    const PathRecord path = simulate_path(ref_rates, p0, horizon, ref_exit, rng);
    const LikelihoodBreakdown lik = log_likelihood(path, ctl_rates, Q0);
    w[idx] = std::exp(lik.log_total());
    state_a[idx] = path.state_at(t);
  });
  for (int i = 0; i < m; ++i) {
    double sum = 0.0;
    for (int k = 0; k < n_paths; ++k) sum += (state_a[k] == i) ? w[k] : 0.0;
    const double mean = sum / n_paths;
    double ss = 0.0;
    for (int k = 0; k < n_paths; ++k) {
      const double x = (state_a[k] == i) ? w[k] : 0.0;
      ss += (x - mean) * (x - mean);
    }
    rep.reweighted(i) = mean;
    rep.reweighted_se(i) = std::sqrt(ss / (n_paths - 1.0) / n_paths);
  }

  // Leg B: direct simulation under the controlled rates.
  std::vector<int> state_b(n_paths);
  parallel_for(n_paths, threads, [&](int idx) {
    Rng rng(derive_seed(seed, 2, static_cast<std::uint64_t>(idx)));
    const PathRecord path = simulate_path(ctl_rates, p0, horizon, ctl_exit, rng);
    state_b[idx] = path.state_at(t);
  });
  for (int i = 0; i < m; ++i) {
    double count = 0.0;
    for (int k = 0; k < n_paths; ++k) count += (state_b[k] == i) ? 1.0 : 0.0;
    const double p = count / n_paths;
    rep.direct(i) = p;
    rep.direct_se(i) = std::sqrt(p * (1.0 - p) / n_paths);
  }

  // Leg C: matrix exponential.
  rep.closed_form = matexp_marginal(Q, p0, t).w;

  double worst = 0.0;
  auto compare = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& sa,
                     const Eigen::VectorXd& b, const Eigen::VectorXd& sb) {
    for (int i = 0; i < m; ++i) {
      const double tol = 3.0 * std::sqrt(sa(i) * sa(i) + sb(i) * sb(i)) + 1e-6;
      worst = std::max(worst, std::abs(a(i) - b(i)) / tol);
    }
  };
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m);
  compare(rep.reweighted, rep.reweighted_se, rep.direct, rep.direct_se);
  compare(rep.reweighted, rep.reweighted_se, rep.closed_form, zero);
  compare(rep.direct, rep.direct_se, rep.closed_form, zero);
  rep.max_discrepancy = worst;
  rep.pass = worst <= 1.0;
  return rep;
}

}  // namespace mfg
