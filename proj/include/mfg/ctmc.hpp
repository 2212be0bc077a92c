#pragma once

#include <Eigen/Dense>
#include <functional>

#include "mfg/path.hpp"
#include "mfg/rate_matrix.hpp"
#include "mfg/rng.hpp"
#include "mfg/simplex.hpp"
#include "mfg/time_grid.hpp"

namespace mfg {

// Off-diagonal transition rates out of state i at time t; entry i must be 0.
using RateFn = std::function<Eigen::VectorXd(double t, int i)>;

RateFn rate_fn_of(const RateMatrix& Q);

// Exact time-inhomogeneous simulation by thinning against a homogeneous
// Poisson clock of rate max_exit_rate. The majorant must dominate the total
// exit rate from every state at every time; a violation aborts.
PathRecord simulate_path(const RateFn& rates, const SimplexPoint& p0, double T,
                         double max_exit_rate, Rng& rng);

// Marginal flow solving dp/dt = Q^*(t) p by classical RK4 on the grid, with
// each node clipped (tolerance -1e-10) and renormalized onto the simplex.
SimplexFlow forward_flow(const RateFn& rates, const SimplexPoint& p0, const TimeGrid& grid);

// p_t = exp(t Q^*) p0 for a constant generator. Test oracle.
SimplexPoint matexp_marginal(const RateMatrix& Q, const SimplexPoint& p0, double t);

// Right-continuous states of the path sampled at the grid nodes.
std::vector<int> states_at_nodes(const PathRecord& path, const TimeGrid& grid);

}  // namespace mfg
