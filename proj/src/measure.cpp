#include "mfg/measure.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mfg/io.hpp"

namespace mfg {

namespace {

constexpr int kLpAtomCap = 64;

bool lex_less(const Eigen::MatrixXd& atoms, int a, int b) {
  for (int c = 0; c < atoms.cols(); ++c) {
    if (atoms(a, c) < atoms(b, c)) return true;
    if (atoms(a, c) > atoms(b, c)) return false;
  }
  return false;
}

bool atoms_close(const Eigen::MatrixXd& A, int a, const Eigen::MatrixXd& B, int b, double tol) {
  for (int c = 0; c < A.cols(); ++c)
    if (std::abs(A(a, c) - B(b, c)) > tol) return false;
  return true;
}

}  // namespace

DiscreteMeasure DiscreteMeasure::dirac(const Eigen::VectorXd& a) {
  DiscreteMeasure mu;
  mu.atoms = a.transpose();
  mu.weights = Eigen::VectorXd::Ones(1);
  return mu;
}

DiscreteMeasure DiscreteMeasure::canonical(double merge_tol) const {
  const int k = n_atoms();
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return lex_less(atoms, a, b); });

  DiscreteMeasure out;
  out.atoms.resize(k, dim());
  out.weights.resize(k);
  int n = 0;
  for (int idx : order) {
    if (weights(idx) == 0.0) continue;
    if (n > 0 && atoms_close(out.atoms, n - 1, atoms, idx, merge_tol)) {
      out.weights(n - 1) += weights(idx);
    } else {
      out.atoms.row(n) = atoms.row(idx);
      out.weights(n) = weights(idx);
      ++n;
    }
  }
  out.atoms.conservativeResize(n, dim());
  out.weights.conservativeResize(n);
  return out;
}

Eigen::VectorXd DiscreteMeasure::mean() const {
  return atoms.transpose() * weights;
}

bool DiscreteMeasure::valid(double tol) const {
  if (n_atoms() == 0) return false;
  if ((weights.array() < 0.0).any()) return false;
  return std::abs(weights.sum() - 1.0) <= tol;
}

std::string DiscreteMeasure::to_csv() const {
  std::string out;
  for (int i = 0; i < n_atoms(); ++i) {
    for (int c = 0; c < dim(); ++c) {
      out += fmt_double(atoms(i, c));
      out += ',';
    }
    out += fmt_double(weights(i));
    out += '\n';
  }
  return out;
}

DiscreteMeasure DiscreteMeasure::from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      double v = 0.0;
      auto [np, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{})
        throw std::invalid_argument("DiscreteMeasure::from_csv: malformed row '" + line + "'");
      row.push_back(v);
      p = (np < end && *np == ',') ? np + 1 : np;
    }
    if (rows.empty() || row.size() == rows.front().size()) {
      rows.push_back(std::move(row));
    } else {
      throw std::invalid_argument("DiscreteMeasure::from_csv: ragged rows");
    }
  }
  if (rows.empty() || rows.front().size() < 2)
    throw std::invalid_argument("DiscreteMeasure::from_csv: empty input");
  const int k = static_cast<int>(rows.size());
  const int l = static_cast<int>(rows.front().size()) - 1;
  DiscreteMeasure mu;
  mu.atoms.resize(k, l);
  mu.weights.resize(k);
  for (int i = 0; i < k; ++i) {
    for (int c = 0; c < l; ++c) mu.atoms(i, c) = rows[i][c];
    mu.weights(i) = rows[i][l];
  }
  return mu;
}

namespace {

// Quantile coupling in dimension 1: integral of |F_mu - F_nu|.
double w1_quantile(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  struct Pt {
    double x;
    double dmu;
    double dnu;
  };
  std::vector<Pt> pts;
  pts.reserve(mu.n_atoms() + nu.n_atoms());
  for (int i = 0; i < mu.n_atoms(); ++i) pts.push_back({mu.atoms(i, 0), mu.weights(i), 0.0});
  for (int i = 0; i < nu.n_atoms(); ++i) pts.push_back({nu.atoms(i, 0), 0.0, nu.weights(i)});
  std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.x < b.x; });
  // Merge coincident breakpoints so the sweep is symmetric in (mu, nu).
  std::size_t n = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (n > 0 && pts[i].x == pts[n - 1].x) {
      pts[n - 1].dmu += pts[i].dmu;
      pts[n - 1].dnu += pts[i].dnu;
    } else {
      pts[n++] = pts[i];
    }
  }
  double dist = 0.0, fmu = 0.0, fnu = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    fmu += pts[i].dmu;
    fnu += pts[i].dnu;
    dist += std::abs(fmu - fnu) * (pts[i + 1].x - pts[i].x);
  }
  return dist;
}

}  // namespace

// Transportation LP by successive shortest paths with node potentials.
// Uncapacitated bipartite network; each augmentation exhausts a supply or a
// demand, so there are at most n_mu + n_nu rounds.
double w1_exact_lp(const DiscreteMeasure& mu_in, const DiscreteMeasure& nu_in) {
  const DiscreteMeasure mu = mu_in.canonical();
  const DiscreteMeasure nu = nu_in.canonical();
  const int ns = mu.n_atoms(), nt = nu.n_atoms();
  if (ns > kLpAtomCap || nt > kLpAtomCap)
    throw std::invalid_argument("w1: support too large for the exact LP (cap 64 atoms)");

  Eigen::MatrixXd cost(ns, nt);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j)
      cost(i, j) = (mu.atoms.row(i) - nu.atoms.row(j)).norm();

  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(ns, nt);
  Eigen::VectorXd supply = mu.weights, demand = nu.weights;
  Eigen::VectorXd pot_u = Eigen::VectorXd::Zero(ns), pot_v = Eigen::VectorXd::Zero(nt);
  const double inf = std::numeric_limits<double>::infinity();
  const double done_tol = 1e-15;

  double remaining = supply.sum();
  int guard = 2 * (ns + nt) + 4;
  while (remaining > done_tol && guard-- > 0) {
    // Dijkstra over the residual graph, sources = positive supplies.
    Eigen::VectorXd du = Eigen::VectorXd::Constant(ns, inf);
    Eigen::VectorXd dv = Eigen::VectorXd::Constant(nt, inf);
    std::vector<int> par_v(nt, -1);  // sink j reached from source par_v[j]
    std::vector<int> par_u(ns, -1);  // source i reached back from sink par_u[i]
    std::vector<bool> fin_u(ns, false), fin_v(nt, false);
    for (int i = 0; i < ns; ++i)
      if (supply(i) > done_tol) du(i) = 0.0;

    while (true) {
      // Pick the unfinished node with the smallest label.
      int bi = -1, bj = -1;
      double best = inf;
      for (int i = 0; i < ns; ++i)
        if (!fin_u[i] && du(i) < best) { best = du(i); bi = i; bj = -1; }
      for (int j = 0; j < nt; ++j)
        if (!fin_v[j] && dv(j) < best) { best = dv(j); bj = j; bi = -1; }
      if (bi < 0 && bj < 0) break;
      if (bi >= 0) {
        fin_u[bi] = true;
        for (int j = 0; j < nt; ++j) {
          if (fin_v[j]) continue;
          double rc = cost(bi, j) + pot_u(bi) - pot_v(j);
          if (rc < 0.0) rc = 0.0;  // guard fp round-off
          if (du(bi) + rc < dv(j)) {
            dv(j) = du(bi) + rc;
            par_v[j] = bi;
          }
        }
      } else {
        fin_v[bj] = true;
        for (int i = 0; i < ns; ++i) {
          if (fin_u[i] || flow(i, bj) <= 0.0) continue;
          double rc = -cost(i, bj) - pot_u(i) + pot_v(bj);
          if (rc < 0.0) rc = 0.0;
          if (dv(bj) + rc < du(i)) {
            du(i) = dv(bj) + rc;
            par_u[i] = bj;
          }
        }
      }
    }

    int target = -1;
    double best = inf;
    for (int j = 0; j < nt; ++j)
      if (demand(j) > done_tol && dv(j) < best) { best = dv(j); target = j; }
    if (target < 0) break;  // numerically exhausted

    for (int i = 0; i < ns; ++i)
      if (du(i) < inf) pot_u(i) += du(i);
    for (int j = 0; j < nt; ++j)
      if (dv(j) < inf) pot_v(j) += dv(j);

    // Walk back to a source, collecting the bottleneck.
    double delta = demand(target);
    {
      int j = target;
      while (true) {
        int i = par_v[j];
        if (par_u[i] < 0) { delta = std::min(delta, supply(i)); break; }
        delta = std::min(delta, flow(i, par_u[i]));
        j = par_u[i];
      }
    }
    {
      int j = target;
      while (true) {
        int i = par_v[j];
        flow(i, j) += delta;
        if (par_u[i] < 0) { supply(i) -= delta; break; }
        flow(i, par_u[i]) -= delta;
        j = par_u[i];
      }
      demand(target) -= delta;
    }
    remaining -= delta;
  }

  return (cost.array() * flow.array()).sum();
}

double w1(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (mu.dim() != nu.dim())
    throw std::invalid_argument("w1: control dimension mismatch");
  if (mu.dim() == 1) return w1_quantile(mu, nu);
  return w1_exact_lp(mu, nu);
}

SimplexPoint empirical_states(const std::vector<int>& states, int m) {
  if (states.empty()) throw std::invalid_argument("empirical_states: empty sample");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (int s : states) {
    if (s < 0 || s >= m) throw std::out_of_range("empirical_states: state out of range");
    w(s) += 1.0;
  }
  w /= static_cast<double>(states.size());
  return SimplexPoint(w);
}

DiscreteMeasure empirical_controls(const std::vector<Eigen::VectorXd>& controls) {
  if (controls.empty()) throw std::invalid_argument("empirical_controls: empty sample");
  DiscreteMeasure mu;
  const int l = static_cast<int>(controls.front().size());
  mu.atoms.resize(static_cast<int>(controls.size()), l);
  mu.weights = Eigen::VectorXd::Constant(static_cast<int>(controls.size()),
                                         1.0 / static_cast<double>(controls.size()));
  for (std::size_t i = 0; i < controls.size(); ++i) mu.atoms.row(static_cast<int>(i)) = controls[i];
  return mu.canonical();
}

DiscreteMeasure pushforward_policy(const Eigen::MatrixXd& per_state_controls,
                                   const SimplexPoint& p) {
  if (per_state_controls.rows() != p.dim())
    throw std::invalid_argument("pushforward_policy: one control per state required");
  DiscreteMeasure mu;
  mu.atoms = per_state_controls;
  mu.weights = p.w;
  return mu.canonical();
}

double ControlFlow::sup_w1_distance(const ControlFlow& other) const {
  double worst = 0.0;
  for (int k = 0; k < grid.n_nodes(); ++k)
    worst = std::max(worst, w1(measures[k], other.measures[k]));
  return worst;
}

DiscreteMeasure damp_measures(const DiscreteMeasure& a, const DiscreteMeasure& b, double theta) {
  DiscreteMeasure mix;
  mix.atoms.resize(a.n_atoms() + b.n_atoms(), a.dim());
  mix.weights.resize(a.n_atoms() + b.n_atoms());
  mix.atoms.topRows(a.n_atoms()) = a.atoms;
  mix.weights.head(a.n_atoms()) = (1.0 - theta) * a.weights;
  mix.atoms.bottomRows(b.n_atoms()) = b.atoms;
  mix.weights.tail(b.n_atoms()) = theta * b.weights;
  DiscreteMeasure out = mix.canonical();
  // Prune dust so supports cannot grow without bound across iterations.
  std::vector<int> keep;
  for (int i = 0; i < out.n_atoms(); ++i)
    if (out.weights(i) >= 1e-16) keep.push_back(i);
  if (static_cast<int>(keep.size()) != out.n_atoms()) {
    DiscreteMeasure pruned;
    pruned.atoms.resize(static_cast<int>(keep.size()), out.dim());
    pruned.weights.resize(static_cast<int>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
      pruned.atoms.row(static_cast<int>(i)) = out.atoms.row(keep[i]);
      pruned.weights(static_cast<int>(i)) = out.weights(keep[i]);
    }
    out = pruned;
  }
  out.weights /= out.weights.sum();
  return out;
}

}  // namespace mfg
