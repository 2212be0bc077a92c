#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mfg/simplex.hpp"
#include "mfg/time_grid.hpp"

namespace mfg {

/// Finitely supported probability measure on the control set A in R^l.
/// Atoms are stored row-wise; canonical form is lexicographically sorted
/// with duplicates (coordinate tolerance 1e-12) merged.
struct DiscreteMeasure {
  Eigen::MatrixXd atoms;    // (k x l)
  Eigen::VectorXd weights;  // k, nonnegative, sums to 1

  int n_atoms() const { return static_cast<int>(atoms.rows()); }
  int dim() const { return static_cast<int>(atoms.cols()); }

  static DiscreteMeasure dirac(const Eigen::VectorXd& a);

  // Sorted, merged, zero-weight atoms dropped.
  DiscreteMeasure canonical(double merge_tol = 1e-12) const;

  Eigen::VectorXd mean() const;
  bool valid(double tol = 1e-12) const;

  // Text form: one `atom_coords...,weight` row per atom. Round-trips exactly.
  std::string to_csv() const;
  static DiscreteMeasure from_csv(const std::string& text);
};

// Exact 1-Wasserstein distance with Euclidean ground metric. Dimension 1 uses
// the quantile coupling; higher dimensions solve the transportation LP
// exactly (supports capped at 64 atoms per side).
double w1(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

// Exposed for cross-checking the quantile route.
double w1_exact_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

SimplexPoint empirical_states(const std::vector<int>& states, int m);
DiscreteMeasure empirical_controls(const std::vector<Eigen::VectorXd>& controls);

// Law of the feedback control a(X) when X ~ p: sum_i p_i delta_{a_i}.
// `per_state_controls` holds one control per state, row-wise.
DiscreteMeasure pushforward_policy(const Eigen::MatrixXd& per_state_controls,
                                   const SimplexPoint& p);

/// Measure-valued flow on the grid, evaluated piecewise-constant from the
/// left node (the node value extends forward over its cell).
struct ControlFlow {
  TimeGrid grid;
  std::vector<DiscreteMeasure> measures;  // one per node

  ControlFlow() = default;
  ControlFlow(const TimeGrid& g, const DiscreteMeasure& constant_value)
      : grid(g), measures(g.n_nodes(), constant_value) {}

  const DiscreteMeasure& at_left(double t) const { return measures[grid.left_node(t)]; }
  const DiscreteMeasure& at_node(int k) const { return measures[k]; }

  double sup_w1_distance(const ControlFlow& other) const;
};

// Convex combination (1-theta)*a + theta*b taken on the union of supports;
// atom positions are never interpolated. Atoms below weight 1e-16 dropped.
DiscreteMeasure damp_measures(const DiscreteMeasure& a, const DiscreteMeasure& b, double theta);

}  // namespace mfg
