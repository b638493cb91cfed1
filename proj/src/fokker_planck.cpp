#include "vvmfg/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vvmfg/tridiag.hpp"

namespace vvmfg {

namespace {

constexpr double kCflLimit = 0.9;
constexpr double kNegativityTol = 1e-12;

// Face velocities for one time level: grad_p H at the face midpoint with the
// face slope of u as (negated) momentum. Index j is the face between cells j
// and j+1; on truncated grids faces 0..n-2 are interior and slot n-1 is unused.
void face_velocities_from_u(const HamiltonianModel& model, std::span<const double> u,
                            const MeasureSummary& mu, const SpatialGrid& grid,
                            std::span<double> out) {
    const int n = grid.n;
    const double invdx = 1.0 / grid.dx;
    const int faces = grid.is_torus() ? n : n - 1;
    for (int j = 0; j < faces; ++j) {
        const double slope = (u[grid.wrap(j + 1)] - u[j]) * invdx;
        out[j] = model.grad_p(grid.face(j), -slope, mu);
    }
    if (!grid.is_torus()) out[n - 1] = 0.0;
}

// One conservative upwind step followed by implicit diffusion.
void fp_step(std::span<const double> rho, std::span<const double> face_v, const SpatialGrid& grid,
             double dt, double diff_coef, int level, std::span<double> out) {
    const int n = grid.n;
    double max_speed = 0.0;
    const int faces = grid.is_torus() ? n : n - 1;
    for (int j = 0; j < faces; ++j) max_speed = std::max(max_speed, std::abs(face_v[j]));
    if (max_speed * dt / grid.dx > kCflLimit + 1e-12) {
        std::ostringstream os;
        os << "solve_fp: CFL violated at time level " << level << " (speed " << max_speed
           << "); admissible dt <= " << kCflLimit * grid.dx / max_speed;
        throw ConfigError(os.str());
    }

    // F_{j+1/2} = b+ rho_j + b- rho_{j+1}; boundary faces stay at zero flux.
    std::vector<double> flux(n, 0.0);
    for (int j = 0; j < faces; ++j) {
        const double b = face_v[j];
        const double left = rho[j];
        const double right = rho[grid.wrap(j + 1)];
        flux[j] = std::max(b, 0.0) * left + std::min(b, 0.0) * right;
    }

    std::vector<double> half(n);
    const double lam = dt / grid.dx;
    for (int j = 0; j < n; ++j) {
        const double f_right = (!grid.is_torus() && j == n - 1) ? 0.0 : flux[j];
        const double f_left = (!grid.is_torus() && j == 0) ? 0.0 : flux[grid.wrap(j - 1)];
        half[j] = rho[j] - lam * (f_right - f_left);
    }

    if (diff_coef > 0.0) {
        const std::vector<double> solved = implicit_diffusion_solve(half, grid, diff_coef);
        std::copy(solved.begin(), solved.end(), out.begin());
    } else {
        std::copy(half.begin(), half.end(), out.begin());
    }

    for (int j = 0; j < n; ++j) {
        if (!std::isfinite(out[j]) || out[j] < -kNegativityTol) {
            std::ostringstream os;
            os << "solve_fp: scheme failure (density " << out[j] << ") at time level " << level + 1
               << ", cell " << j;
            throw DivergenceError(os.str());
        }
    }
}

std::vector<double> checked_m0(std::span<const double> m0, const SpatialGrid& grid) {
    if (static_cast<int>(m0.size()) != grid.n) {
        throw StructuralError("solve_fp: initial density length mismatch");
    }
    return {m0.begin(), m0.end()};
}

}  // namespace

std::vector<double> make_initial_density(const InitialDensitySpec& spec, const SpatialGrid& grid) {
    std::vector<double> rho(grid.n, 0.0);
    if (const auto* g = std::get_if<GaussianInit>(&spec)) {
        if (!(g->variance > 0.0)) throw ConfigError("make_initial_density: variance must be positive");
        if (g->mean < grid.x_min || g->mean > grid.x_max) {
            throw ConfigError("make_initial_density: mean outside the domain");
        }
        const double s = std::sqrt(g->variance);
        for (int j = 0; j < grid.n; ++j) {
            const double z = (grid.center(j) - g->mean) / s;
            rho[j] = std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * M_PI));
        }
        rho[0] = 0.0;
        rho[grid.n - 1] = 0.0;
    } else if (const auto* p = std::get_if<PointMassInit>(&spec)) {
        if (p->at < grid.x_min || p->at > grid.x_max) {
            throw ConfigError("make_initial_density: point mass outside the domain");
        }
        int j = static_cast<int>(std::floor((p->at - grid.x_min) / grid.dx));
        j = std::clamp(j, 0, grid.n - 1);
        rho[j] = 1.0 / grid.dx;
        return rho;
    } else {
        const auto& c = std::get<CustomInit>(spec);
        if (static_cast<int>(c.values.size()) != grid.n) {
            throw ConfigError("make_initial_density: custom slice length mismatch");
        }
        for (double v : c.values) {
            if (v < 0.0) throw ConfigError("make_initial_density: custom slice has negative entries");
        }
        rho = c.values;
    }

    const double mass = integrate(rho, grid);
    if (!(mass > 0.0)) throw ConfigError("make_initial_density: zero mass after truncation");
    for (double& v : rho) v /= mass;
    return rho;
}

DensityTrajectory solve_fp(const HamiltonianModel& model, const SpaceTimeField& u,
                           std::span<const double> m0, double beta) {
    const SpatialGrid& grid = u.grid();
    const TimeGrid& tgrid = u.tgrid();
    DensityTrajectory rho(grid, tgrid);
    std::vector<double> init = checked_m0(m0, grid);
    std::copy(init.begin(), init.end(), rho.level(0).begin());

    const double diff_coef = 0.5 * beta * beta * tgrid.dt;
    std::vector<double> face_v(grid.n);
    for (int level = 0; level < tgrid.nt; ++level) {
        const MeasureSummary mu = build_measure(model, rho.level(level), grid);
        face_velocities_from_u(model, u.level(level), mu, grid, face_v);
        fp_step(rho.level(level), face_v, grid, tgrid.dt, diff_coef, level, rho.level(level + 1));
    }
    return rho;
}

DensityTrajectory solve_fp_policy(const SpaceTimeField& q, std::span<const double> m0, double beta) {
    const SpatialGrid& grid = q.grid();
    const TimeGrid& tgrid = q.tgrid();
    DensityTrajectory rho(grid, tgrid);
    std::vector<double> init = checked_m0(m0, grid);
    std::copy(init.begin(), init.end(), rho.level(0).begin());

    const double diff_coef = 0.5 * beta * beta * tgrid.dt;
    for (int level = 0; level < tgrid.nt; ++level) {
        fp_step(rho.level(level), q.level(level), grid, tgrid.dt, diff_coef, level,
                rho.level(level + 1));
    }
    return rho;
}

SpaceTimeField extract_policy(const HamiltonianModel& model, const SpaceTimeField& u,
                              const DensityTrajectory& rho) {
    if (!u.grid().same_as(rho.grid()) || !u.tgrid().same_as(rho.tgrid())) {
        throw StructuralError("extract_policy: grids of u and rho differ");
    }
    SpaceTimeField q(u.grid(), u.tgrid());
    for (int level = 0; level <= u.tgrid().nt; ++level) {
        const MeasureSummary mu = build_measure(model, rho.level(level), u.grid());
        face_velocities_from_u(model, u.level(level), mu, u.grid(), q.level(level));
    }
    return q;
}

}  // namespace vvmfg
