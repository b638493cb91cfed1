#ifndef VVMFG_METRICS_HPP
#define VVMFG_METRICS_HPP

#include <span>
#include <utility>
#include <vector>

#include "vvmfg/grid.hpp"

namespace vvmfg {

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<std::pair<double, double>> points;  // (log beta, log error)
};

// Restriction of the space domain realizing a compact set K.
struct Restriction {
    double x_lo;
    double x_hi;
};

// W1 of two density slices on a shared grid: dx * sum_j |CDF1_j - CDF2_j| with
// CDFs by cumulative sum. On the torus the CDF difference is minimized over the
// n cyclic cut offsets (circular W1). Near-unit-mass inputs are renormalized;
// a deviation beyond 1e-8 is noted on stderr.
double w1_grid(std::span<const double> rho1, std::span<const double> rho2, const SpatialGrid& grid);

// sup over time levels of w1_grid between the level slices.
double sup_t_w1(const SpaceTimeField& rho1, const SpaceTimeField& rho2);

// max over time levels and restricted cells of |f1 - f2|.
double sup_diff(const SpaceTimeField& f1, const SpaceTimeField& f2);
double sup_diff(const SpaceTimeField& f1, const SpaceTimeField& f2, const Restriction& restriction);

// Ordinary least squares of log(error) on log(beta). Requires >= 2 points with
// positive coordinates.
RateFit loglog_slope(std::span<const std::pair<double, double>> beta_error_pairs);

}  // namespace vvmfg

#endif
