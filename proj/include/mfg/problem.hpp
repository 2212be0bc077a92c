#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mfg/measure.hpp"
#include "mfg/rate_matrix.hpp"
#include "mfg/simplex.hpp"

namespace mfg {

/// Axis-aligned compact control set A = prod_c [lo_c, hi_c].
struct ControlBox {
  Eigen::VectorXd lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  Eigen::VectorXd clamp(Eigen::VectorXd a) const;
  bool contains(const Eigen::VectorXd& a, double tol = 1e-12) const;
  Eigen::VectorXd midpoint() const { return 0.5 * (lo + hi); }
  Eigen::VectorXd corner(unsigned bits) const;
  int n_corners() const { return 1 << dim(); }
};

/// Quadratic control cost 0.5 * curvature * |a - center|^2 + b_i . a + offset.
/// Separable across coordinates, so the box-constrained minimizer is the
/// clamped stationary point.
struct QuadraticControlCost {
  double curvature = 1.0;
  Eigen::VectorXd center;  // l
  Eigen::MatrixXd b;       // m x l, per-state linear term
  double offset = 0.0;
};

// Structural model data. Rates take the form q = q0 + q1 . alpha on
// admissible pairs; costs split as f = f0(t,i,alpha,p) + f1(t,i,p) +
// f2(t,p,nu); terminal cost g(i,p). The mean field of control may enter q0
// only when flags.mean_field_in_q is set (nu passed as a pointer, null when
// the term is to be omitted).
struct ProblemSpec {
  using RateBaseFn =
      std::function<double(double t, int i, int j, const Eigen::VectorXd& p, const DiscreteMeasure* nu)>;
  using RateSlopeFn =
      std::function<Eigen::VectorXd(double t, int i, int j, const Eigen::VectorXd& p)>;
  using Cost0Fn =
      std::function<double(double t, int i, const Eigen::VectorXd& alpha, const Eigen::VectorXd& p)>;
  using Cost0GradFn =
      std::function<Eigen::VectorXd(double t, int i, const Eigen::VectorXd& alpha, const Eigen::VectorXd& p)>;
  using Cost1Fn = std::function<double(double t, int i, const Eigen::VectorXd& p)>;
  using Cost2Fn =
      std::function<double(double t, const Eigen::VectorXd& p, const DiscreteMeasure& nu)>;
  using TerminalFn = std::function<double(int i, const Eigen::VectorXd& p)>;

  int m = 0;
  double T = 1.0;
  ControlBox box;
  double C1 = 0.0, C2 = 0.0;  // admissible rate bounds
  double gamma = 0.0;         // declared convexity modulus of f0
  struct {
    bool mean_field_in_q = false;
  } flags;
  bool f0_depends_p = false;
  bool separable = true;          // f0 p-free and q mean-field-free
  bool has_control_coupling = false;  // f2 not identically zero

  RateBaseFn q0;
  RateSlopeFn q1;
  Cost0Fn f0;
  Cost0GradFn f0_grad;
  std::optional<QuadraticControlCost> quad;  // set when f0 is the quadratic family
  Cost1Fn f1;
  Cost2Fn f2;
  TerminalFn g;

  SimplexPoint p_init;
  RateMatrix Qref;  // mask-aware reference generator
  std::uint64_t seed = 0;

  double rate(double t, int i, int j, const Eigen::VectorXd& alpha, const Eigen::VectorXd& p,
              const DiscreteMeasure* nu = nullptr) const;
  // Off-diagonal rates out of state i (entry i = 0).
  Eigen::VectorXd rate_row(double t, int i, const Eigen::VectorXd& alpha,
                           const Eigen::VectorXd& p, const DiscreteMeasure* nu = nullptr) const;
  // f0 + f1, plus f2 when nu is supplied.
  double running_cost(double t, int i, const Eigen::VectorXd& alpha, const Eigen::VectorXd& p,
                      const DiscreteMeasure* nu = nullptr) const;
  double terminal_cost(int i, const Eigen::VectorXd& p) const { return g(i, p); }

  double max_exit_rate() const { return (m - 1) * C2; }
  int control_dim() const { return box.dim(); }
};

struct SpecViolation {
  std::string what;
  double value = 0.0;
};

struct SpecReport {
  std::vector<SpecViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Stochastic structural validation: sampled admissible rates must fall in
// (C1, C2) and f0 must pass the secant convexity test at the declared gamma.
SpecReport validate_spec(const ProblemSpec& spec, int n_samples, std::uint64_t seed);

// Builds a spec from the JSON schema
//   { m, T, control_dim, control_box, rate_bounds, mask?, family:{q,f0,f1,f2,g},
//     p_init, seed, flags? }.
// Throws std::invalid_argument naming the offending field.
ProblemSpec spec_from_json(const nlohmann::json& config);

}  // namespace mfg
