#ifndef VVMFG_HJB_HPP
#define VVMFG_HJB_HPP

#include <span>

#include "vvmfg/grid.hpp"
#include "vvmfg/hamiltonian.hpp"

namespace vvmfg {

enum class Dissipation {
    LocalLaxFriedrichs,      // theta = 1.1 max |grad_p H| per time level
    ClassicalLaxFriedrichs,  // theta = dx/dt, carrying the scheme's full
                             // numerical viscosity dx^2/(2 dt)
};

// Backward solver for  -du/dt + H(x, -grad u, rho_t) = (beta^2/2) Lap u,
// u(T, .) = g.  Each backward step applies
//   (i)  an explicit monotone Lax-Friedrichs step
//          Hhat(x, p-, p+, mu) = H(x, -(p- + p+)/2, mu) - theta (p+ - p-)/2,
//        with p+- the one-sided differences of u and theta per the dissipation
//        mode (the local bound keeps the dissipation at the scale of the
//        actual characteristic speeds);
//   (ii) an implicit diffusion step (I - (beta^2/2) dt Lap_h) u = u_half.
// beta = 0 runs step (i) alone (first-order vanishing-viscosity scheme).
// H is evaluated at momentum -grad u; the slopes of u are negated right before
// the model call and nowhere else.
SpaceTimeField solve_hjb(const HamiltonianModel& model, const DensityTrajectory& rho,
                         std::span<const double> g, double beta,
                         Dissipation dissipation = Dissipation::LocalLaxFriedrichs);

// Policy evaluation for a frozen drift field q (see PolicyField in coupling.hpp:
// q(level, j) is the face velocity between cells j and j+1):
//   -du/dt - q . grad u - L(x, q, rho_t) = (beta^2/2) Lap u,  u(T, .) = g,
// with L(x, q, rho) = max_p { p q - H(x, p, rho) }. Transport is upwinded by the
// sign of the cell velocity; the diffusion step matches solve_hjb.
SpaceTimeField solve_hjb_linear(const HamiltonianModel& model, const SpaceTimeField& q,
                                const DensityTrajectory& rho, std::span<const double> g,
                                double beta, double R);

}  // namespace vvmfg

#endif
