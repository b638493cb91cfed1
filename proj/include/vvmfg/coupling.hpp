#ifndef VVMFG_COUPLING_HPP
#define VVMFG_COUPLING_HPP

#include <optional>
#include <span>
#include <vector>

#include "vvmfg/fokker_planck.hpp"
#include "vvmfg/grid.hpp"
#include "vvmfg/hamiltonian.hpp"
#include "vvmfg/hjb.hpp"

namespace vvmfg {

enum class SolveStatus { Converged, MaxIterations };

struct IterationRecord {
    int iteration = 0;
    double fixed_point_gap = 0.0;   // sup-t W1 between the iterate and its best response
    double successive_gap = 0.0;    // sup-t W1 between consecutive density iterates
    double policy_change = 0.0;     // sup |q^{n+1} - q^n| (policy iteration only)
    double hj_residual = 0.0;       // per-iteration certificates (policy iteration only)
    double fp_weak_residual = 0.0;
};

// Bounded drift field. q(level, j) is the velocity at the face between cells j
// and j+1; |q| <= R everywhere.
struct PolicyField {
    SpaceTimeField q;
    double R = 0.0;

    void validate() const;
};

struct MFGSolution {
    SpaceTimeField u;
    DensityTrajectory rho;
    SpaceTimeField policy;  // face velocities of the final pair
    double beta = 0.0;
    int iterations = 0;
    SolveStatus status = SolveStatus::Converged;
    std::vector<IterationRecord> history;

    bool converged() const { return status == SolveStatus::Converged; }
};

struct Damping {
    enum class Kind { Harmonic, Fixed };
    Kind kind = Kind::Harmonic;
    double delta = 0.5;  // used by Kind::Fixed

    double step(int k) const { return kind == Kind::Harmonic ? 1.0 / (k + 1) : delta; }
};

// Damped fictitious play on the density: rho <- (1 - delta_k) rho + delta_k
// FP(HJB(rho)). Stops when the sup-t W1 gap between the iterate and its best
// response is <= tol (which dominates the gap between consecutive iterates).
// Running out of iterations returns the last iterate with the residual history,
// never throws.
MFGSolution solve_mfg_fictitious_play(const HamiltonianModel& model, std::span<const double> g,
                                      std::span<const double> m0, const SpatialGrid& grid,
                                      const TimeGrid& tgrid, double beta, double tol, int max_iter,
                                      const Damping& damping = {},
                                      Dissipation dissipation = Dissipation::LocalLaxFriedrichs);

// Policy iteration: solve_fp_policy(q^n) -> solve_hjb_linear(q^n) -> pointwise
// update q^{n+1} = clip(grad_p H(x, -grad u^n, rho^n), [-R, R]), the minimizer
// of q grad u + L(x, q, rho) over |q| <= R for H convex in p. Stops when
// sup |q^{n+1} - q^n| <= tol. Requires beta > 0: with beta = 0 the evaluation
// PDEs degenerate and the iteration is ill-posed, so that is a configuration
// error.
MFGSolution solve_mfg_policy_iteration(const HamiltonianModel& model, std::span<const double> g,
                                       std::span<const double> m0, const SpatialGrid& grid,
                                       const TimeGrid& tgrid, double beta, double R,
                                       const std::optional<SpaceTimeField>& q0, double tol,
                                       int max_iter);

struct ResidualReport {
    double hj_residual = 0.0;       // sup of the scheme's own backward-step defect
    double fp_weak_residual = 0.0;  // duality defect against smooth test functions
    double fixed_point_gap = 0.0;   // sup-t W1(rho, FP(HJB(rho)))
};

ResidualReport residuals(const MFGSolution& solution, const HamiltonianModel& model);

// The two pieces of the report that make sense for any (u, rho, beta) triple.
double hj_scheme_residual(const HamiltonianModel& model, const SpaceTimeField& u,
                          const DensityTrajectory& rho, double beta);
double fp_weak_residual(const HamiltonianModel& model, const SpaceTimeField& u,
                        const DensityTrajectory& rho, double beta);

}  // namespace vvmfg

#endif
