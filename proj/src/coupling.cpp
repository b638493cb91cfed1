#include "vvmfg/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "vvmfg/metrics.hpp"

namespace vvmfg {

namespace {

// q^{n+1}(level, face) = clip(grad_p H(x_face, -face slope of u, rho_level)).
SpaceTimeField improve_policy(const HamiltonianModel& model, const SpaceTimeField& u,
                              const DensityTrajectory& rho, double R) {
    SpaceTimeField q = extract_policy(model, u, rho);
    for (double& v : q.raw()) v = std::clamp(v, -R, R);
    return q;
}

double policy_sup_change(const SpaceTimeField& a, const SpaceTimeField& b) {
    const int faces = a.grid().is_torus() ? a.n() : a.n() - 1;
    double best = 0.0;
    for (int l = 0; l < a.levels(); ++l) {
        for (int j = 0; j < faces; ++j) best = std::max(best, std::abs(a.at(l, j) - b.at(l, j)));
    }
    return best;
}

// Smooth compactly supported bump in s on (-1, 1).
double mollifier(double s) {
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
}
double mollifier_d1(double s) {
    if (std::abs(s) >= 1.0) return 0.0;
    const double w = 1.0 - s * s;
    return mollifier(s) * (-2.0 * s / (w * w));
}
double mollifier_d2(double s) {
    if (std::abs(s) >= 1.0) return 0.0;
    const double w = 1.0 - s * s;
    const double g = -2.0 * s / (w * w);
    const double gp = -2.0 / (w * w) - 8.0 * s * s / (w * w * w);
    return mollifier(s) * (g * g + gp);
}

}  // namespace

void PolicyField::validate() const {
    const int faces = q.grid().is_torus() ? q.n() : q.n() - 1;
    for (int l = 0; l < q.levels(); ++l) {
        for (int j = 0; j < faces; ++j) {
            if (std::abs(q.at(l, j)) > R) {
                throw StructuralError("PolicyField: |q| exceeds the bound R");
            }
        }
    }
}

MFGSolution solve_mfg_fictitious_play(const HamiltonianModel& model, std::span<const double> g,
                                      std::span<const double> m0, const SpatialGrid& grid,
                                      const TimeGrid& tgrid, double beta, double tol, int max_iter,
                                      const Damping& damping, Dissipation dissipation) {
    MFGSolution sol;
    sol.beta = beta;

    // Initial guess: the initial density frozen in time.
    DensityTrajectory rho(grid, tgrid);
    for (int l = 0; l <= tgrid.nt; ++l) std::copy(m0.begin(), m0.end(), rho.level(l).begin());

    for (int k = 0; k < max_iter; ++k) {
        SpaceTimeField u = solve_hjb(model, rho, g, beta, dissipation);
        DensityTrajectory response = solve_fp(model, u, m0, beta);

        IterationRecord rec;
        rec.iteration = k;
        rec.fixed_point_gap = sup_t_w1(rho, response);

        if (rec.fixed_point_gap <= tol) {
            sol.history.push_back(rec);
            sol.iterations = k + 1;
            sol.status = SolveStatus::Converged;
            sol.u = std::move(u);
            sol.rho = std::move(rho);
            sol.policy = extract_policy(model, sol.u, sol.rho);
            sol.rho.validate();
            sol.u.check_finite("solve_mfg_fictitious_play");
            return sol;
        }

        const double delta = damping.step(k);
        DensityTrajectory next(grid, tgrid);
        for (std::size_t i = 0; i < next.raw().size(); ++i) {
            next.raw()[i] = (1.0 - delta) * rho.raw()[i] + delta * response.raw()[i];
        }
        rec.successive_gap = sup_t_w1(next, rho);
        sol.history.push_back(rec);
        rho = std::move(next);
    }

    sol.iterations = max_iter;
    sol.status = SolveStatus::MaxIterations;
    sol.u = solve_hjb(model, rho, g, beta, dissipation);
    sol.rho = std::move(rho);
    sol.policy = extract_policy(model, sol.u, sol.rho);
    return sol;
}

MFGSolution solve_mfg_policy_iteration(const HamiltonianModel& model, std::span<const double> g,
                                       std::span<const double> m0, const SpatialGrid& grid,
                                       const TimeGrid& tgrid, double beta, double R,
                                       const std::optional<SpaceTimeField>& q0, double tol,
                                       int max_iter) {
    if (!(beta > 0.0)) {
        throw UnsupportedError(
            "solve_mfg_policy_iteration: beta must be positive (the first-order evaluation "
            "equations are ill-posed for the iteration)");
    }
    if (!(R > 0.0)) throw ConfigError("solve_mfg_policy_iteration: R must be positive");
    if (max_iter < 1) throw ConfigError("solve_mfg_policy_iteration: max_iter must be >= 1");

    SpaceTimeField q = q0 ? *q0 : SpaceTimeField(grid, tgrid, 0.0);
    if (!q.grid().same_as(grid) || !q.tgrid().same_as(tgrid)) {
        throw StructuralError("solve_mfg_policy_iteration: q0 grid mismatch");
    }
    for (double& v : q.raw()) v = std::clamp(v, -R, R);

    MFGSolution sol;
    sol.beta = beta;

    for (int k = 0; k < max_iter; ++k) {
        DensityTrajectory rho = solve_fp_policy(q, m0, beta);
        SpaceTimeField u = solve_hjb_linear(model, q, rho, g, beta, R);
        SpaceTimeField q_next = improve_policy(model, u, rho, R);

        IterationRecord rec;
        rec.iteration = k;
        rec.policy_change = policy_sup_change(q_next, q);
        rec.hj_residual = hj_scheme_residual(model, u, rho, beta);
        rec.fp_weak_residual = fp_weak_residual(model, u, rho, beta);
        sol.history.push_back(rec);

        if (rec.policy_change <= tol || k == max_iter - 1) {
            sol.iterations = k + 1;
            sol.status = rec.policy_change <= tol ? SolveStatus::Converged : SolveStatus::MaxIterations;
            sol.u = std::move(u);
            sol.rho = std::move(rho);
            sol.policy = std::move(q_next);
            sol.rho.validate();
            sol.u.check_finite("solve_mfg_policy_iteration");
            return sol;
        }
        q = std::move(q_next);
    }

    sol.status = SolveStatus::MaxIterations;  // max_iter == 0
    return sol;
}

double hj_scheme_residual(const HamiltonianModel& model, const SpaceTimeField& u,
                          const DensityTrajectory& rho, double beta) {
    const SpatialGrid& grid = u.grid();
    const TimeGrid& tgrid = u.tgrid();
    const int n = grid.n;
    const double invdx = 1.0 / grid.dx;
    const double nu = 0.5 * beta * beta;

    double worst = 0.0;
    std::vector<double> pm(n), pp(n);
    for (int level = 0; level < tgrid.nt; ++level) {
        const auto next = u.level(level + 1);
        const auto cur = u.level(level);
        const MeasureSummary mu = build_measure(model, rho.level(level + 1), grid);

        // Same stencils as the solver: one-sided slopes of the later level,
        // dissipation from the per-level bound, implicit Laplacian of the
        // earlier level.
        for (int j = 0; j < n; ++j) {
            if (grid.is_torus()) {
                pm[j] = (next[j] - next[grid.wrap(j - 1)]) * invdx;
                pp[j] = (next[grid.wrap(j + 1)] - next[j]) * invdx;
            } else {
                pm[j] = j > 0 ? (next[j] - next[j - 1]) * invdx : 0.0;
                pp[j] = j < n - 1 ? (next[j + 1] - next[j]) * invdx : 0.0;
            }
        }
        if (!grid.is_torus()) {
            pm[0] = pp[0];
            pp[n - 1] = pm[n - 1];
        }
        double theta = 0.0;
        for (int j = 0; j < n; ++j) {
            const double x = grid.center(j);
            theta = std::max(theta, std::abs(model.grad_p(x, -pm[j], mu)));
            theta = std::max(theta, std::abs(model.grad_p(x, -pp[j], mu)));
        }
        theta *= 1.1;

        const std::vector<double> lap = laplacian(cur, grid);
        const int j_lo = grid.is_torus() ? 0 : 1;
        const int j_hi = grid.is_torus() ? n : n - 1;
        for (int j = j_lo; j < j_hi; ++j) {
            const double dt_term = (next[j] - cur[j]) / tgrid.dt;
            const double avg = 0.5 * (pm[j] + pp[j]);
            const double hhat =
                model.value(grid.center(j), -avg, mu) - 0.5 * theta * (pp[j] - pm[j]);
            worst = std::max(worst, std::abs(-dt_term + hhat - nu * lap[j]));
        }
    }
    return worst;
}

double fp_weak_residual(const HamiltonianModel& model, const SpaceTimeField& u,
                        const DensityTrajectory& rho, double beta) {
    const SpatialGrid& grid = u.grid();
    const TimeGrid& tgrid = u.tgrid();
    const int n = grid.n;
    const double nu = 0.5 * beta * beta;
    const double T = tgrid.T;

    // Five smooth test functions phi(t, x) = eta(t) psi(x), compactly supported
    // inside (0, T) x (domain interior).
    const double span = grid.length();
    struct Psi {
        double center;
        double width;
    };
    const Psi psis[5] = {{grid.x_min + 0.30 * span, 0.25 * span},
                         {grid.x_min + 0.50 * span, 0.30 * span},
                         {grid.x_min + 0.70 * span, 0.25 * span},
                         {grid.x_min + 0.45 * span, 0.40 * span},
                         {grid.x_min + 0.60 * span, 0.35 * span}};

    // Cell drift as the average of the two adjacent face velocities.
    const SpaceTimeField q = extract_policy(model, u, rho);

    double worst = 0.0;
    for (const Psi& psi : psis) {
        double acc = 0.0;
        for (int level = 0; level < tgrid.nt; ++level) {
            const double t = tgrid.time(level);
            const double s_t = 2.0 * t / T - 1.0;
            const double eta = mollifier(s_t);
            const double eta_p = mollifier_d1(s_t) * 2.0 / T;
            const auto r = rho.level(level);
            const auto qf = q.level(level);
            for (int j = 0; j < n; ++j) {
                const double x = grid.center(j);
                const double s_x = (x - psi.center) / psi.width;
                const double px = mollifier(s_x);
                const double px_d1 = mollifier_d1(s_x) / psi.width;
                const double px_d2 = mollifier_d2(s_x) / (psi.width * psi.width);

                double b;
                if (grid.is_torus()) {
                    b = 0.5 * (qf[grid.wrap(j - 1)] + qf[j]);
                } else if (j == 0) {
                    b = qf[0];
                } else if (j == n - 1) {
                    b = qf[n - 2];
                } else {
                    b = 0.5 * (qf[j - 1] + qf[j]);
                }

                const double integrand =
                    -eta_p * px - eta * px_d1 * b - nu * eta * px_d2;
                acc += integrand * r[j];
            }
        }
        worst = std::max(worst, std::abs(acc * grid.dx * tgrid.dt));
    }
    return worst;
}

ResidualReport residuals(const MFGSolution& solution, const HamiltonianModel& model) {
    ResidualReport rep;
    rep.hj_residual = hj_scheme_residual(model, solution.u, solution.rho, solution.beta);
    rep.fp_weak_residual = fp_weak_residual(model, solution.u, solution.rho, solution.beta);

    const SpaceTimeField u = solve_hjb(model, solution.rho, solution.u.level(solution.u.tgrid().nt),
                                       solution.beta);
    const DensityTrajectory response =
        solve_fp(model, u, solution.rho.level(0), solution.beta);
    rep.fixed_point_gap = sup_t_w1(solution.rho, response);
    return rep;
}

}  // namespace vvmfg
