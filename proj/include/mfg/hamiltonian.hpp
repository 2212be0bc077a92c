#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mfg/problem.hpp"

namespace mfg {

// H_i(t, z, alpha, p, nu) = f(t, e_i, alpha, p, nu)
//                           + sum_{j != i} (z_j - z_i) (q(t,i,j,alpha,p,nu) - qref_ij),
// with the mask-aware reference rate qref. Pass nu = nullptr to omit the
// control-mean-field terms.
double hamiltonian(const ProblemSpec& spec, double t, int i, const Eigen::VectorXd& z,
                   const Eigen::VectorXd& alpha, const Eigen::VectorXd& p,
                   const DiscreteMeasure* nu = nullptr);

// Controlled-rate form of the same driver, without the reference-rate terms:
// f + sum_{j != i} q(t,i,j,alpha,p,nu) (z_j - z_i). Equals
// hamiltonian + sum_{j != i} qref_ij (z_j - z_i).
double controlled_driver(const ProblemSpec& spec, double t, int i, const Eigen::VectorXd& z,
                         const Eigen::VectorXd& alpha, const Eigen::VectorXd& p,
                         const DiscreteMeasure* nu = nullptr);

struct HamiltonianEval {
  double value = 0.0;
  Eigen::VectorXd gradient_alpha;  // grad f0 + sum_{j != i} (z_j - z_i) q1
};

HamiltonianEval hamiltonian_eval(const ProblemSpec& spec, double t, int i,
                                 const Eigen::VectorXd& z, const Eigen::VectorXd& alpha,
                                 const Eigen::VectorXd& p, const DiscreteMeasure* nu = nullptr);

struct MinimizeResult {
  Eigen::VectorXd alpha;
  double h_min = 0.0;  // Hamiltonian at alpha, control-mean-field terms omitted
  bool converged = true;
  bool tie_warning = false;  // two box corners within 1e-9: minimizer may not be unique
};

// Minimizer of alpha -> H_i. Quadratic f0 uses the clamped stationary point
// (exact by separability); anything else runs projected gradient descent with
// backtracking and a per-coordinate golden-section polish. The minimizer
// never depends on the mean field of control, which is why nu is not an
// argument; h_min correspondingly omits the nu-additive terms.
MinimizeResult minimize_hamiltonian(const ProblemSpec& spec, double t, int i,
                                    const Eigen::VectorXd& z, const Eigen::VectorXd& p);

// Minimized Hamiltonian with all terms, for the backward value equation.
double minimized_hamiltonian(const ProblemSpec& spec, double t, int i, const Eigen::VectorXd& z,
                             const Eigen::VectorXd& p, const DiscreteMeasure& nu);

struct LipschitzReport {
  double q_quotient = 0.0;     // |dq| / (|da| + |dp| + W1(dnu))
  double f_quotient = 0.0;     // running cost, same denominator
  double g_quotient = 0.0;     // |dg| / |dp|
  double ahat_quotient = 0.0;  // |da^| / (|dz|_{e_i} + |dp|)
  int n_samples = 0;
};

// Max observed difference quotients over random input pairs. Report only;
// the regularity itself is an assumption on the model.
LipschitzReport lipschitz_probe(const ProblemSpec& spec, int n_samples, std::uint64_t seed);

struct MonotoneWitness {
  double t = 0.0;
  Eigen::VectorXd p, p_prime;
  double value = 0.0;  // the offending (negative) pairing sum
  std::string which;   // "g" or "f1"
};

struct MonotoneReport {
  bool g_monotone = true;
  bool f1_monotone = true;
  std::vector<MonotoneWitness> witnesses;
};

// Samples the Lasry-Lions pairing sums for g and f1 over random (p, p', t);
// any value below -1e-12 is recorded as a counterexample. Requires the
// separable cost structure.
MonotoneReport check_monotonicity(const ProblemSpec& spec, int n_samples, std::uint64_t seed);

}  // namespace mfg
