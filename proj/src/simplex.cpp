#include "mfg/simplex.hpp"

#include <stdexcept>

namespace mfg {

SimplexPoint::SimplexPoint(Eigen::VectorXd weights) : w(std::move(weights)) {
  if (!valid()) throw std::invalid_argument("SimplexPoint: weights must be >= 0 and sum to 1");
}

SimplexPoint SimplexPoint::uniform(int m) {
  SimplexPoint p;
  p.w = Eigen::VectorXd::Constant(m, 1.0 / m);
  return p;
}

SimplexPoint SimplexPoint::vertex(int m, int i) {
  SimplexPoint p;
  p.w = Eigen::VectorXd::Zero(m);
  p.w(i) = 1.0;
  return p;
}

bool SimplexPoint::valid(double tol) const {
  if (w.size() == 0) return false;
  if ((w.array() < 0.0).any()) return false;
  return std::abs(w.sum() - 1.0) <= tol;
}

SimplexFlow SimplexFlow::constant(const TimeGrid& g, const SimplexPoint& p) {
  SimplexFlow f(g, p.dim());
  for (int k = 0; k < g.n_nodes(); ++k) f.values.row(k) = p.w;
  return f;
}

Eigen::VectorXd SimplexFlow::at(double t) const {
  if (t <= 0.0) return values.row(0);
  if (t >= grid.T) return values.row(grid.n_steps);
  const int k = grid.cell_left(t);
  const double dt = grid.dt();
  const double s = (t - k * dt) / dt;
  return (1.0 - s) * values.row(k) + s * values.row(k + 1);
}

double SimplexFlow::sup_l1_distance(const SimplexFlow& other) const {
  double worst = 0.0;
  for (int k = 0; k < grid.n_nodes(); ++k) {
    const double d = (values.row(k) - other.values.row(k)).cwiseAbs().sum();
    if (d > worst) worst = d;
  }
  return worst;
}

}  // namespace mfg
