#include "mfg/hamiltonian.hpp"

#include <cmath>
#include <stdexcept>

#include "mfg/rng.hpp"

namespace mfg {

double hamiltonian(const ProblemSpec& spec, double t, int i, const Eigen::VectorXd& z,
                   const Eigen::VectorXd& alpha, const Eigen::VectorXd& p,
                   const DiscreteMeasure* nu) {
  if (!spec.box.contains(alpha)) throw std::invalid_argument("hamiltonian: alpha outside A");
  double h = spec.running_cost(t, i, alpha, p, nu);
  for (int j = 0; j < spec.m; ++j) {
    if (j == i || !spec.Qref.mask(i, j)) continue;
    h += (z(j) - z(i)) * (spec.rate(t, i, j, alpha, p, nu) - spec.Qref.entries(i, j));
  }
  return h;
}

double controlled_driver(const ProblemSpec& spec, double t, int i, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& alpha, const Eigen::VectorXd& p,
                         const DiscreteMeasure* nu) {
  double h = spec.running_cost(t, i, alpha, p, nu);
  for (int j = 0; j < spec.m; ++j) {
    if (j == i || !spec.Qref.mask(i, j)) continue;
    h += (z(j) - z(i)) * spec.rate(t, i, j, alpha, p, nu);
  }
  return h;
}

namespace {

Eigen::VectorXd coupling_slope(const ProblemSpec& spec, double t, int i, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& p);

}  // namespace

HamiltonianEval hamiltonian_eval(const ProblemSpec& spec, double t, int i,
                                 const Eigen::VectorXd& z, const Eigen::VectorXd& alpha,
                                 const Eigen::VectorXd& p, const DiscreteMeasure* nu) {
  HamiltonianEval out;
  out.value = hamiltonian(spec, t, i, z, alpha, p, nu);
  out.gradient_alpha = spec.f0_grad(t, i, alpha, p) + coupling_slope(spec, t, i, z, p);
  return out;
}

namespace {

// Coupling vector c with H_i(alpha) = f0(alpha) + c . alpha + const.
Eigen::VectorXd coupling_slope(const ProblemSpec& spec, double t, int i, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& p) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.control_dim());
  for (int j = 0; j < spec.m; ++j) {
    if (j == i || !spec.Qref.mask(i, j)) continue;
    c += (z(j) - z(i)) * spec.q1(t, i, j, p);
  }
  return c;
}

double golden_section(const std::function<double(double)>& phi, double lo, double hi,
                      double xtol) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = phi(x1), f2 = phi(x2);
  while (b - a > xtol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = phi(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = phi(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

MinimizeResult minimize_hamiltonian(const ProblemSpec& spec, double t, int i,
                                    const Eigen::VectorXd& z, const Eigen::VectorXd& p) {
  const Eigen::VectorXd cpl = coupling_slope(spec, t, i, z, p);
  MinimizeResult res;

  auto objective = [&](const Eigen::VectorXd& a) {
    return spec.f0(t, i, a, p) + cpl.dot(a);
  };

  if (spec.quad) {
    // Stationary point of 0.5*k|a-c|^2 + (b_i + cpl).a, clamped per coordinate.
    const auto& q = *spec.quad;
    Eigen::VectorXd a =
        q.center - (q.b.row(i).transpose() + cpl) / q.curvature;
    res.alpha = spec.box.clamp(std::move(a));
    res.converged = true;
  } else {
    const int l = spec.control_dim();
    Eigen::VectorXd a = spec.box.midpoint();
    double val = objective(a);
    bool converged = false;
    for (int iter = 0; iter < 200; ++iter) {
      const Eigen::VectorXd grad = spec.f0_grad(t, i, a, p) + cpl;
      // Projected-gradient stationarity on the box.
      Eigen::VectorXd pg = grad;
      for (int c = 0; c < l; ++c) {
        if (a(c) <= spec.box.lo(c) + 1e-15 && pg(c) > 0) pg(c) = 0;
        if (a(c) >= spec.box.hi(c) - 1e-15 && pg(c) < 0) pg(c) = 0;
      }
      if (pg.norm() <= 1e-10) {
        converged = true;
        break;
      }
      double step = 1.0;
      while (step > 1e-16) {
        Eigen::VectorXd cand = spec.box.clamp(a - step * grad);
        const double cv = objective(cand);
        if (cv < val - 1e-12) {
          a = std::move(cand);
          val = cv;
          break;
        }
        step *= 0.5;
      }
      if (step <= 1e-16) break;
    }
    // Per-coordinate golden-section polish. Value comparisons cannot localize
    // past sqrt(eps), so a gradient-sign bisection finishes the job: the
    // objective is convex per coordinate, hence the partial derivative is
    // nondecreasing along it.
    for (int c = 0; c < l; ++c) {
      Eigen::VectorXd probe = a;
      a(c) = golden_section(
          [&](double x) {
            probe(c) = x;
            return objective(probe);
          },
          spec.box.lo(c), spec.box.hi(c), 1e-10);
      auto slope = [&](double x) {
        probe(c) = x;
        return (spec.f0_grad(t, i, probe, p) + cpl)(c);
      };
      double lo = spec.box.lo(c), hi = spec.box.hi(c);
      if (slope(lo) >= 0.0) {
        a(c) = lo;
      } else if (slope(hi) <= 0.0) {
        a(c) = hi;
      } else {
        while (hi - lo > 1e-13) {
          const double mid = 0.5 * (lo + hi);
          (slope(mid) >= 0.0 ? hi : lo) = mid;
        }
        a(c) = 0.5 * (lo + hi);
      }
    }
    val = objective(a);
    res.alpha = a;
    Eigen::VectorXd grad = spec.f0_grad(t, i, a, p) + cpl;
    for (int c = 0; c < l; ++c) {
      if (a(c) <= spec.box.lo(c) + 1e-12 && grad(c) > 0) grad(c) = 0;
      if (a(c) >= spec.box.hi(c) - 1e-12 && grad(c) < 0) grad(c) = 0;
    }
    res.converged = converged || grad.norm() <= 1e-8;
  }

  // Near-tie over box corners signals a numerically non-unique minimizer.
  double best_corner = std::numeric_limits<double>::infinity();
  double second_corner = best_corner;
  for (int b = 0; b < spec.box.n_corners(); ++b) {
    const double v = objective(spec.box.corner(static_cast<unsigned>(b)));
    if (v < best_corner) {
      second_corner = best_corner;
      best_corner = v;
    } else if (v < second_corner) {
      second_corner = v;
    }
  }
  if (spec.box.n_corners() > 1 && second_corner - best_corner <= 1e-9 &&
      std::abs(objective(res.alpha) - best_corner) <= 1e-9)
    res.tie_warning = true;

  res.h_min = hamiltonian(spec, t, i, z, res.alpha, p, nullptr);
  return res;
}

double minimized_hamiltonian(const ProblemSpec& spec, double t, int i, const Eigen::VectorXd& z,
                             const Eigen::VectorXd& p, const DiscreteMeasure& nu) {
  const MinimizeResult res = minimize_hamiltonian(spec, t, i, z, p);
  return hamiltonian(spec, t, i, z, res.alpha, p, &nu);
}

namespace {

Eigen::VectorXd random_simplex(int m, Rng& rng) {
  Eigen::VectorXd w(m);
  for (int i = 0; i < m; ++i) w(i) = -std::log(1.0 - rng.uniform());
  return w / w.sum();
}

Eigen::VectorXd random_in_box(const ControlBox& box, Rng& rng) {
  Eigen::VectorXd a(box.dim());
  for (int c = 0; c < box.dim(); ++c) a(c) = box.lo(c) + rng.uniform() * (box.hi(c) - box.lo(c));
  return a;
}

DiscreteMeasure random_measure(const ControlBox& box, int max_atoms, Rng& rng) {
  const int k = 1 + static_cast<int>(rng.uniform() * max_atoms);
  DiscreteMeasure nu;
  nu.atoms.resize(k, box.dim());
  nu.weights.resize(k);
  for (int i = 0; i < k; ++i) {
    nu.atoms.row(i) = random_in_box(box, rng);
    nu.weights(i) = -std::log(1.0 - rng.uniform());
  }
  nu.weights /= nu.weights.sum();
  return nu.canonical();
}

}  // namespace

LipschitzReport lipschitz_probe(const ProblemSpec& spec, int n_samples, std::uint64_t seed) {
  LipschitzReport rep;
  rep.n_samples = n_samples;
  Rng rng(derive_seed(seed, 0x11b));
  for (int s = 0; s < n_samples; ++s) {
    const double t = rng.uniform() * spec.T;
    const int i = static_cast<int>(rng.uniform() * spec.m);
    const Eigen::VectorXd p = random_simplex(spec.m, rng), pp = random_simplex(spec.m, rng);
    const Eigen::VectorXd a = random_in_box(spec.box, rng), ap = random_in_box(spec.box, rng);
    const DiscreteMeasure nu = random_measure(spec.box, spec.m, rng);
    const DiscreteMeasure nup = random_measure(spec.box, spec.m, rng);
    const double denom = (a - ap).norm() + (p - pp).norm() + w1(nu, nup);
    if (denom > 1e-9) {
      for (int j = 0; j < spec.m; ++j) {
        if (j == i || !spec.Qref.mask(i, j)) continue;
        const double dq = std::abs(spec.rate(t, i, j, a, p, &nu) - spec.rate(t, i, j, ap, pp, &nup));
        rep.q_quotient = std::max(rep.q_quotient, dq / denom);
      }
      const double df = std::abs(spec.running_cost(t, i, a, p, &nu) -
                                 spec.running_cost(t, i, ap, pp, &nup));
      rep.f_quotient = std::max(rep.f_quotient, df / denom);
    }
    const double dp_norm = (p - pp).norm();
    if (dp_norm > 1e-9) {
      const double dg = std::abs(spec.g(i, p) - spec.g(i, pp));
      rep.g_quotient = std::max(rep.g_quotient, dg / dp_norm);
    }
    Eigen::VectorXd z(spec.m), zp(spec.m);
    for (int j = 0; j < spec.m; ++j) {
      z(j) = 6.0 * rng.uniform() - 3.0;
      zp(j) = 6.0 * rng.uniform() - 3.0;
    }
    const double dz = std::sqrt(seminorm_sq(i, (z - zp).eval()));
    const double da_denom = dz + dp_norm;
    if (da_denom > 1e-9) {
      const Eigen::VectorXd a1 = minimize_hamiltonian(spec, t, i, z, p).alpha;
      const Eigen::VectorXd a2 = minimize_hamiltonian(spec, t, i, zp, pp).alpha;
      rep.ahat_quotient = std::max(rep.ahat_quotient, (a1 - a2).norm() / da_denom);
    }
  }
  return rep;
}

MonotoneReport check_monotonicity(const ProblemSpec& spec, int n_samples, std::uint64_t seed) {
  if (!spec.separable)
    throw std::invalid_argument(
        "check_monotonicity: spec lacks the separable cost structure (q mean-field-free, "
        "f0 independent of p)");
  MonotoneReport rep;
  Rng rng(derive_seed(seed, 0x5e9a));
  for (int s = 0; s < n_samples; ++s) {
    const double t = rng.uniform() * spec.T;
    const Eigen::VectorXd p = random_simplex(spec.m, rng), pp = random_simplex(spec.m, rng);
    double sum_g = 0.0, sum_f1 = 0.0;
    for (int i = 0; i < spec.m; ++i) {
      sum_g += (spec.g(i, p) - spec.g(i, pp)) * (p(i) - pp(i));
      sum_f1 += (spec.f1(t, i, p) - spec.f1(t, i, pp)) * (p(i) - pp(i));
    }
    if (sum_g < -1e-12) {
      rep.g_monotone = false;
      rep.witnesses.push_back({t, p, pp, sum_g, "g"});
    }
    if (sum_f1 < -1e-12) {
      rep.f1_monotone = false;
      rep.witnesses.push_back({t, p, pp, sum_f1, "f1"});
    }
  }
  return rep;
}

}  // namespace mfg
