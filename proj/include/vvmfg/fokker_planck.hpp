#ifndef VVMFG_FOKKER_PLANCK_HPP
#define VVMFG_FOKKER_PLANCK_HPP

#include <span>
#include <variant>
#include <vector>

#include "vvmfg/grid.hpp"
#include "vvmfg/hamiltonian.hpp"

namespace vvmfg {

struct GaussianInit {
    double mean = 0.0;
    double variance = 1.0;
};
struct PointMassInit {
    double at = 0.0;
};
struct CustomInit {
    std::vector<double> values;
};
using InitialDensitySpec = std::variant<GaussianInit, PointMassInit, CustomInit>;

// Nonnegative unit-mass slice. Gaussian specs evaluate the density at cell
// centers, zero the two boundary cells, and renormalize; a point mass puts
// 1/dx into the nearest cell.
std::vector<double> make_initial_density(const InitialDensitySpec& spec, const SpatialGrid& grid);

// Forward conservative solver for
//   d rho/dt + div( rho b ) = (beta^2/2) Lap rho,   rho(0, .) = m0,
// with the drift b(t, x) = grad_p H(x, -grad u(t, x), rho_t) sampled at faces:
// the face velocity between cells j and j+1 is grad_p H evaluated at the face
// midpoint with momentum -(u_{j+1} - u_j)/dx. Fluxes are upwind
// (F = b+ rho_left + b- rho_right), so mass telescopes exactly on the torus and
// boundary faces carry zero flux on truncated grids; diffusion is the implicit
// step shared with the HJB solver.
DensityTrajectory solve_fp(const HamiltonianModel& model, const SpaceTimeField& u,
                           std::span<const double> m0, double beta);

// Same update with a frozen face-velocity field q: the FP step advances
//   d rho/dt + div( rho q ) = (beta^2/2) Lap rho.
// q(level, j) is the velocity at the face between cells j and j+1 (the index
// n-1 wraps on the torus and is unused on truncated grids). At the MFG fixed
// point q = grad_p H(x, -grad u, rho), which makes this the same trajectory
// solve_fp produces.
DensityTrajectory solve_fp_policy(const SpaceTimeField& q, std::span<const double> m0, double beta);

// The face-velocity field solve_fp derives from (u, rho); feeding it back
// through solve_fp_policy reproduces solve_fp bit for bit.
SpaceTimeField extract_policy(const HamiltonianModel& model, const SpaceTimeField& u,
                              const DensityTrajectory& rho);

}  // namespace vvmfg

#endif
