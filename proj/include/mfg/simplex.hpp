#pragma once

#include <Eigen/Dense>

#include "mfg/time_grid.hpp"

namespace mfg {

/// Point on the probability simplex: nonnegative weights summing to 1.
struct SimplexPoint {
  Eigen::VectorXd w;

  SimplexPoint() = default;
  explicit SimplexPoint(Eigen::VectorXd weights);

  int dim() const { return static_cast<int>(w.size()); }
  static SimplexPoint uniform(int m);
  static SimplexPoint vertex(int m, int i);

  bool valid(double tol = 1e-12) const;
};

/// Time-gridded simplex-valued flow, interpolated linearly between nodes.
struct SimplexFlow {
  TimeGrid grid;
  Eigen::MatrixXd values;  // (n_nodes x m), row k = weights at node k

  SimplexFlow() = default;
  SimplexFlow(const TimeGrid& g, int m)
      : grid(g), values(Eigen::MatrixXd::Zero(g.n_nodes(), m)) {}

  static SimplexFlow constant(const TimeGrid& g, const SimplexPoint& p);

  int dim() const { return static_cast<int>(values.cols()); }

  Eigen::VectorXd at(double t) const;        // linear interpolation
  Eigen::VectorXd at_node(int k) const { return values.row(k); }

  double sup_l1_distance(const SimplexFlow& other) const;
};

}  // namespace mfg
