#ifndef VVMFG_PARTICLES_HPP
#define VVMFG_PARTICLES_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vvmfg/closed_form.hpp"
#include "vvmfg/coupling.hpp"
#include "vvmfg/grid.hpp"
#include "vvmfg/hamiltonian.hpp"

namespace vvmfg {

namespace rng {

std::uint64_t splitmix64(std::uint64_t x);

// Stateless draws keyed by (seed, stream, step): any partitioning of particles
// over workers sees identical numbers. Step 0 is reserved for initial-position
// uniforms; dynamics use steps 1, 2, ...
double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t step);
double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t step);

}  // namespace rng

double normal_cdf(double z);
double inverse_normal_cdf(double p);

struct ParticleEnsemble {
    std::vector<double> positions;
    int time_index = 0;
    std::uint64_t seed = 0;
    double beta = 0.0;
};

enum class MeasureFeedback {
    Empirical,   // drift sees the running empirical measure (N-player dynamics)
    FrozenFlow,  // drift sees the solved density flow (decoupled dynamics)
};

struct NPlayerOptions {
    MeasureFeedback feedback = MeasureFeedback::Empirical;
    std::optional<std::vector<double>> initial_positions;    // default: inverse-CDF from rho(0)
    std::optional<std::vector<std::uint64_t>> streams;       // default: particle index
    int store_every = 1;
};

struct NPlayerResult {
    std::vector<ParticleEnsemble> snapshots;  // step 0 plus every store_every-th step
    std::vector<double> snapshot_times;
    long clamp_count = 0;  // positions clamped back into the domain
};

// Euler-Maruyama for N interacting players driven by the solved value function:
//   dX^i = grad_p H(X^i, -grad u(t, X^i), m^N_t) dt + beta dB^i,
// with grad u interpolated on the grid and the measure summary built from the
// empirical ensemble (sample mean, or a smoothed histogram for local models).
// Gaussian increments come from (seed, stream, step), so trajectories are
// reproducible bit for bit for any worker layout.
NPlayerResult simulate_nplayer(const HamiltonianModel& model, const MFGSolution& solution,
                               int num_particles, double dt, std::uint64_t seed,
                               const NPlayerOptions& opts = {});

struct FBSDEPath {
    std::vector<double> times;
    std::vector<double> X;
    std::vector<double> Y;         // -grad u(t, X_t), the decoupling field along the path
    std::vector<double> defect;    // signed Y(t) - Y(T) - int_t^T grad_x H ds
    std::vector<double> residual;  // |defect|
};

// Forward path of the optimality system: X by Euler-Maruyama with drift
// grad_p H(X, Y, rho_t), Y read from the decoupling field. The residual
// integrates the adjoint drift along the realized path; its martingale part has
// zero mean, so seed averages of the signed defect Y(t) - Y(T) - int grad_x H
// isolate the discretization bias.
// antithetic = true negates every Gaussian increment, giving the mirror path
// of the same seed; averaging a path with its mirror cancels the leading
// martingale contribution to the defect.
FBSDEPath simulate_fbsde(const HamiltonianModel& model, const MFGSolution& solution, double x0,
                         double dt, std::uint64_t seed, bool antithetic = false);

// Exact 1-D W1 between N equal-weight atoms and a reference, by quantile
// matching: mean over i of |X_(i) - F^{-1}((i - 1/2)/N)|.
double empirical_w1(std::span<const double> atoms, std::span<const double> rho_slice,
                    const SpatialGrid& grid);
double empirical_w1(std::span<const double> atoms, const closed_form::GaussianParams& ref);

// W1 between two atom sets (any sizes), by sweeping the merged CDF difference.
double empirical_w1_atoms(std::span<const double> a, std::span<const double> b);

}  // namespace vvmfg

#endif
