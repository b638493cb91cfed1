#ifndef VVMFG_TRIDIAG_HPP
#define VVMFG_TRIDIAG_HPP

#include <span>
#include <vector>

#include "vvmfg/grid.hpp"

namespace vvmfg {

// Thomas elimination for a*x_{j-1} + b*x_j + c*x_{j+1} = d. Vectors a and c hold
// the sub/super diagonals aligned with rows (a[0] and c[n-1] unused).
std::vector<double> tridiag_solve(std::span<const double> a, std::span<const double> b,
                                  std::span<const double> c, std::span<const double> d);

// Applies (I - coef * Lap_h)^{-1} to rhs, where Lap_h is the discrete Laplacian of
// the grid (cyclic on the torus via Sherman-Morrison, Neumann rows on truncated
// grids). coef = (beta^2/2) * dt in the solvers. Row sums of the operator are 1,
// so the solve conserves the discrete total exactly.
std::vector<double> implicit_diffusion_solve(std::span<const double> rhs, const SpatialGrid& grid,
                                             double coef);

}  // namespace vvmfg

#endif
