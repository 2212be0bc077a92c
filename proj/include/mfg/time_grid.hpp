#pragma once

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace mfg {

/// Uniform grid on [0, T] with nodes t_k = k * dt, k = 0..n_steps.
struct TimeGrid {
  double T = 1.0;
  int n_steps = 1000;

  TimeGrid() = default;
  TimeGrid(double horizon, int steps) : T(horizon), n_steps(steps) {
    if (!(horizon >= 0.0)) throw std::invalid_argument("TimeGrid: horizon must be >= 0");
    if (steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
  }

  double dt() const { return T / n_steps; }
  int n_nodes() const { return n_steps + 1; }
  double node(int k) const { return (k == n_steps) ? T : k * dt(); }

  // Index of the left node of the cell containing t (clamped to [0, n_steps-1]).
  int cell_left(double t) const {
    int k = static_cast<int>(std::floor(t / dt() + 1e-12));
    if (k < 0) k = 0;
    if (k > n_steps - 1) k = n_steps - 1;
    return k;
  }

  // Node index used by piecewise-constant-left evaluation: the node at or
  // immediately before t, so the node value extends forward over its cell.
  int left_node(double t) const {
    int k = static_cast<int>(std::floor(t / dt() + 1e-12));
    if (k < 0) k = 0;
    if (k > n_steps) k = n_steps;
    return k;
  }
};

}  // namespace mfg
