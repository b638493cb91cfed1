#include "vvmfg/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vvmfg/tridiag.hpp"

namespace vvmfg {

namespace {

constexpr double kCflLimit = 0.9;

// One-sided differences of a slice. On truncated grids the missing side falls
// back to the interior one, which is the upwind side for outflow boundaries.
void one_sided_slopes(std::span<const double> u, const SpatialGrid& grid,
                      std::vector<double>& pm, std::vector<double>& pp) {
    const int n = grid.n;
    const double invdx = 1.0 / grid.dx;
    if (grid.is_torus()) {
        for (int j = 0; j < n; ++j) {
            pm[j] = (u[j] - u[grid.wrap(j - 1)]) * invdx;
            pp[j] = (u[grid.wrap(j + 1)] - u[j]) * invdx;
        }
    } else {
        for (int j = 1; j < n; ++j) pm[j] = (u[j] - u[j - 1]) * invdx;
        for (int j = 0; j < n - 1; ++j) pp[j] = (u[j + 1] - u[j]) * invdx;
        pm[0] = pp[0];
        pp[n - 1] = pm[n - 1];
    }
}

void check_cfl(double max_speed, double dt, double dx, int level, const char* who) {
    if (max_speed * dt / dx > kCflLimit + 1e-12) {
        std::ostringstream os;
        os << who << ": CFL violated at time level " << level << " (speed " << max_speed
           << "); admissible dt <= " << kCflLimit * dx / max_speed;
        throw ConfigError(os.str());
    }
}

void check_level_finite(std::span<const double> u, int level, const char* who) {
    for (double v : u) {
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << who << ": divergence (non-finite value) at time level " << level;
            throw DivergenceError(os.str());
        }
    }
}

}  // namespace

SpaceTimeField solve_hjb(const HamiltonianModel& model, const DensityTrajectory& rho,
                         std::span<const double> g, double beta, Dissipation dissipation) {
    const SpatialGrid& grid = rho.grid();
    const TimeGrid& tgrid = rho.tgrid();
    const int n = grid.n;
    if (static_cast<int>(g.size()) != n) throw StructuralError("solve_hjb: terminal slice length mismatch");

    SpaceTimeField u(grid, tgrid);
    std::copy(g.begin(), g.end(), u.level(tgrid.nt).begin());

    const double diff_coef = 0.5 * beta * beta * tgrid.dt;
    std::vector<double> pm(n), pp(n), half(n);

    for (int level = tgrid.nt - 1; level >= 0; --level) {
        const auto next = u.level(level + 1);
        const MeasureSummary mu = build_measure(model, rho.level(level + 1), grid);

        one_sided_slopes(next, grid, pm, pp);

        // Dissipation bound over the momentum range actually visited this level.
        double max_speed = 0.0;
        for (int j = 0; j < n; ++j) {
            const double x = grid.center(j);
            max_speed = std::max(max_speed, std::abs(model.grad_p(x, -pm[j], mu)));
            max_speed = std::max(max_speed, std::abs(model.grad_p(x, -pp[j], mu)));
        }
        check_cfl(max_speed, tgrid.dt, grid.dx, level, "solve_hjb");
        const double theta = dissipation == Dissipation::ClassicalLaxFriedrichs
                                 ? grid.dx / tgrid.dt
                                 : 1.1 * max_speed;

        for (int j = 0; j < n; ++j) {
            const double avg = 0.5 * (pm[j] + pp[j]);
            const double hhat = model.value(grid.center(j), -avg, mu) - 0.5 * theta * (pp[j] - pm[j]);
            half[j] = next[j] - tgrid.dt * hhat;
        }

        auto dst = u.level(level);
        if (diff_coef > 0.0) {
            const std::vector<double> solved = implicit_diffusion_solve(half, grid, diff_coef);
            std::copy(solved.begin(), solved.end(), dst.begin());
        } else {
            std::copy(half.begin(), half.end(), dst.begin());
        }
        check_level_finite(dst, level, "solve_hjb");
    }
    return u;
}

SpaceTimeField solve_hjb_linear(const HamiltonianModel& model, const SpaceTimeField& q,
                                const DensityTrajectory& rho, std::span<const double> g,
                                double beta, double R) {
    const SpatialGrid& grid = rho.grid();
    const TimeGrid& tgrid = rho.tgrid();
    const int n = grid.n;
    if (!q.grid().same_as(grid) || !q.tgrid().same_as(tgrid)) {
        throw StructuralError("solve_hjb_linear: policy field grid mismatch");
    }
    if (static_cast<int>(g.size()) != n) {
        throw StructuralError("solve_hjb_linear: terminal slice length mismatch");
    }

    SpaceTimeField u(grid, tgrid);
    std::copy(g.begin(), g.end(), u.level(tgrid.nt).begin());

    const double diff_coef = 0.5 * beta * beta * tgrid.dt;
    std::vector<double> pm(n), pp(n), half(n), qc(n);

    for (int level = tgrid.nt - 1; level >= 0; --level) {
        const auto next = u.level(level + 1);
        const auto qf = q.level(level + 1);
        const MeasureSummary mu = build_measure(model, rho.level(level + 1), grid);

        // Cell velocities from the adjacent face values.
        double max_speed = 0.0;
        for (int j = 0; j < n; ++j) {
            double v;
            if (grid.is_torus()) {
                v = 0.5 * (qf[grid.wrap(j - 1)] + qf[j]);
            } else if (j == 0) {
                v = qf[0];
            } else if (j == n - 1) {
                v = qf[n - 2];
            } else {
                v = 0.5 * (qf[j - 1] + qf[j]);
            }
            qc[j] = v;
            max_speed = std::max(max_speed, std::abs(v));
        }
        check_cfl(max_speed, tgrid.dt, grid.dx, level, "solve_hjb_linear");

        one_sided_slopes(next, grid, pm, pp);
        for (int j = 0; j < n; ++j) {
            const double x = grid.center(j);
            const double slope = qc[j] > 0.0 ? pp[j] : pm[j];
            const double lag = model.lagrangian_max(x, qc[j], mu, R).first;
            half[j] = next[j] + tgrid.dt * (qc[j] * slope + lag);
        }

        auto dst = u.level(level);
        if (diff_coef > 0.0) {
            const std::vector<double> solved = implicit_diffusion_solve(half, grid, diff_coef);
            std::copy(solved.begin(), solved.end(), dst.begin());
        } else {
            std::copy(half.begin(), half.end(), dst.begin());
        }
        check_level_finite(dst, level, "solve_hjb_linear");
    }
    return u;
}

}  // namespace vvmfg
