#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "vvmfg/closed_form.hpp"
#include "vvmfg/fokker_planck.hpp"
#include "vvmfg/hjb.hpp"
#include "vvmfg/metrics.hpp"
#include "vvmfg/tridiag.hpp"

using namespace vvmfg;
namespace cf = closed_form;

namespace {

// H == 0 regardless of arguments; isolates the diffusion step.
class ZeroModel final : public HamiltonianModel {
public:
    std::string name() const override { return "zero"; }
    MeasureNeeds needs() const override { return {}; }
    double value(double, double, const MeasureSummary&) const override { return 0.0; }
    double grad_p(double, double, const MeasureSummary&) const override { return 0.0; }
    double grad_x(double, double, const MeasureSummary&) const override { return 0.0; }
    double convexity_constant() const override { return 0.0; }
};

DensityTrajectory exact_density(const SpatialGrid& grid, const TimeGrid& tgrid, double beta,
                                double m, double sigma2) {
    DensityTrajectory rho(grid, tgrid);
    for (int l = 0; l <= tgrid.nt; ++l) {
        const auto p = cf::rho_exact_params(tgrid.time(l), beta, m, sigma2, tgrid.T);
        const double s = std::sqrt(p.variance);
        auto slice = rho.level(l);
        double mass = 0.0;
        for (int j = 0; j < grid.n; ++j) {
            const double z = (grid.center(j) - m) / s;
            slice[j] = std::exp(-0.5 * z * z);
            mass += slice[j];
        }
        for (int j = 0; j < grid.n; ++j) slice[j] /= mass * grid.dx;
    }
    return rho;
}

double closed_form_sup_error(int n, int nt, double beta, const Restriction& restriction) {
    const double m = 0.0, sigma2 = 0.04, T = 1.0;
    const SpatialGrid grid = SpatialGrid::truncated(m - 5.0, m + 5.0, n);
    const TimeGrid tgrid = TimeGrid::make(T, nt);
    const auto model = make_quadratic_mean_field();
    const DensityTrajectory rho = exact_density(grid, tgrid, beta, m, sigma2);
    std::vector<double> g(grid.n, 0.0);
    const SpaceTimeField u = solve_hjb(*model, rho, g, beta);

    double worst = 0.0;
    for (int l = 0; l <= tgrid.nt; ++l) {
        for (int j = 0; j < grid.n; ++j) {
            const double x = grid.center(j);
            if (x < restriction.x_lo || x > restriction.x_hi) continue;
            worst = std::max(worst, std::abs(u.at(l, j) - cf::u_exact(tgrid.time(l), x, beta, m, T, 1)));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("solve_hjb: zero data stays zero") {
    const SpatialGrid grid = SpatialGrid::torus(0.0, 1.0, 32);
    const TimeGrid tgrid = TimeGrid::make(1.0, 16);
    const ZeroModel model;
    DensityTrajectory rho(grid, tgrid, 1.0);
    std::vector<double> g(grid.n, 0.0);
    for (double beta : {0.0, 0.5}) {
        const SpaceTimeField u = solve_hjb(model, rho, g, beta);
        for (int l = 0; l < u.levels(); ++l) {
            for (int j = 0; j < u.n(); ++j) CHECK(u.at(l, j) == 0.0);
        }
    }
}

TEST_CASE("solve_hjb matches the closed form with first-order refinement") {
    const Restriction restriction{-2.0, 2.0};
    const double coarse = closed_form_sup_error(200, 400, 0.3, restriction);
    const double fine = closed_form_sup_error(400, 800, 0.3, restriction);
    const double dx = 10.0 / 200.0, dt = 1.0 / 400.0;
    CHECK(coarse <= 20.0 * (dx + dt));
    const double ratio = coarse / fine;
    CHECK(ratio >= 1.5);  // halves within 25%
    CHECK(ratio <= 2.5);
}

TEST_CASE("implicit diffusion step: dense-solve oracle on a quadratic terminal cost") {
    const SpatialGrid grid = SpatialGrid::truncated(-1.0, 1.0, 32);
    const TimeGrid tgrid = TimeGrid::make(0.01, 1);  // a single backward step
    const ZeroModel model;
    DensityTrajectory rho(grid, tgrid, 0.5);
    const double beta = 0.8, c = 2.0;
    std::vector<double> g(grid.n);
    for (int j = 0; j < grid.n; ++j) g[j] = c * grid.center(j) * grid.center(j);

    const SpaceTimeField u = solve_hjb(model, rho, g, beta);
    const double coef = 0.5 * beta * beta * tgrid.dt;
    const std::vector<double> oracle = implicit_diffusion_solve(g, grid, coef);
    for (int j = 0; j < grid.n; ++j) CHECK(u.at(0, j) == doctest::Approx(oracle[j]).epsilon(1e-14));

    // deep in the interior the step lifts the parabola by 2 c nu dt
    const int mid = grid.n / 2;
    CHECK(u.at(0, mid) - g[mid] == doctest::Approx(2.0 * c * coef).epsilon(1e-6));
}

TEST_CASE("monotonicity: raising the terminal cost never lowers u") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const SpatialGrid grid = SpatialGrid::torus(0.0, 1.0, 48);
    const TimeGrid tgrid = TimeGrid::make(0.2, 64);
    const auto model = make_quadratic_mean_field();
    DensityTrajectory rho(grid, tgrid, 1.0);

    for (int trial = 0; trial < 5; ++trial) {
        // smooth random pairs g1 <= g2 (white noise would break the CFL bound)
        const double a1 = 0.2 * unif(rng), phi1 = 2.0 * M_PI * unif(rng);
        const double a2 = 0.15 * unif(rng), phi2 = 2.0 * M_PI * unif(rng);
        std::vector<double> g1(grid.n), g2(grid.n);
        for (int j = 0; j < grid.n; ++j) {
            const double x = grid.center(j);
            g1[j] = a1 * std::sin(2.0 * M_PI * x + phi1);
            g2[j] = g1[j] + a2 * (1.0 + std::cos(2.0 * M_PI * x + phi2));
        }
        const SpaceTimeField u1 = solve_hjb(*model, rho, g1, 0.2);
        const SpaceTimeField u2 = solve_hjb(*model, rho, g2, 0.2);
        for (int l = 0; l < u1.levels(); ++l) {
            for (int j = 0; j < grid.n; ++j) CHECK(u2.at(l, j) >= u1.at(l, j) - 1e-12);
        }
    }
}

TEST_CASE("constant-shift equivariance is exact") {
    const SpatialGrid grid = SpatialGrid::torus(0.0, 1.0, 32);
    const TimeGrid tgrid = TimeGrid::make(0.2, 32);
    const auto model = make_local_separable();
    DensityTrajectory rho(grid, tgrid, 1.0);
    std::vector<double> g(grid.n), g_shift(grid.n);
    for (int j = 0; j < grid.n; ++j) {
        g[j] = 0.1 * std::cos(2.0 * M_PI * grid.center(j));
        g_shift[j] = g[j] + 3.25;
    }
    const SpaceTimeField u = solve_hjb(*model, rho, g, 0.4);
    const SpaceTimeField v = solve_hjb(*model, rho, g_shift, 0.4);
    for (int l = 0; l < u.levels(); ++l) {
        for (int j = 0; j < grid.n; ++j) {
            CHECK(v.at(l, j) - u.at(l, j) == doctest::Approx(3.25).epsilon(1e-13));
        }
    }
}

TEST_CASE("beta-continuity of the solution map") {
    const SpatialGrid grid = SpatialGrid::truncated(-5.0, 5.0, 200);
    const TimeGrid tgrid = TimeGrid::make(1.0, 400);
    const auto model = make_quadratic_mean_field();
    const DensityTrajectory rho = exact_density(grid, tgrid, 0.3, 0.0, 0.04);
    std::vector<double> g(grid.n, 0.0);

    double max_lap = 0.0;
    const SpaceTimeField base = solve_hjb(*model, rho, g, 0.3);
    for (int l = 0; l <= tgrid.nt; ++l) {
        for (double v : laplacian(base.level(l), grid)) max_lap = std::max(max_lap, std::abs(v));
    }
    for (const auto& [b1, b2] : {std::pair{0.3, 0.31}, {0.3, 0.303}, {0.3, 0.3003}}) {
        const SpaceTimeField u1 = solve_hjb(*model, rho, g, b1);
        const SpaceTimeField u2 = solve_hjb(*model, rho, g, b2);
        const double dist = sup_diff(u1, u2);
        CHECK(dist <= 5.0 * std::abs(b1 * b1 - b2 * b2) * tgrid.T * max_lap);
    }
}

TEST_CASE("discrete gradients coincide across beta up to discretization error") {
    const int n = 200, nt = 400;
    const SpatialGrid grid = SpatialGrid::truncated(-5.0, 5.0, n);
    const TimeGrid tgrid = TimeGrid::make(1.0, nt);
    const auto model = make_quadratic_mean_field();
    std::vector<double> g(grid.n, 0.0);

    const DensityTrajectory rho0 = exact_density(grid, tgrid, 0.0, 0.0, 0.04);
    const DensityTrajectory rho1 = exact_density(grid, tgrid, 0.4, 0.0, 0.04);
    const SpaceTimeField u0 = solve_hjb(*model, rho0, g, 0.0);
    const SpaceTimeField u1 = solve_hjb(*model, rho1, g, 0.4);

    double worst = 0.0;
    for (int l = 0; l <= nt; ++l) {
        const auto g0 = gradient(u0.level(l), grid);
        const auto g1 = gradient(u1.level(l), grid);
        for (int j = 0; j < n; ++j) {
            const double x = grid.center(j);
            if (x < -2.0 || x > 2.0) continue;  // compact set away from the walls
            worst = std::max(worst, std::abs(g1[j] - g0[j]));
        }
    }
    CHECK(worst <= 10.0 * (grid.dx + tgrid.dt));
}

TEST_CASE("CFL violation raises a configuration error naming the admissible dt") {
    const SpatialGrid grid = SpatialGrid::truncated(-5.0, 5.0, 100);
    const TimeGrid tgrid = TimeGrid::make(1.0, 20);  // dt far beyond the CFL bound
    const auto model = make_quadratic_mean_field();
    const DensityTrajectory rho = exact_density(grid, tgrid, 0.0, 0.0, 0.04);
    std::vector<double> g(grid.n);
    for (int j = 0; j < grid.n; ++j) g[j] = grid.center(j) * grid.center(j);
    CHECK_THROWS_WITH_AS(solve_hjb(*model, rho, g, 0.0), doctest::Contains("admissible dt"),
                         ConfigError);
}

namespace {

// H = p^2/2 - sin^2(2 pi x)/2: quadratic in p with a periodic potential, so the
// characteristic solution of the frozen-policy equation is available in closed
// form on the torus.
class PeriodicQuadModel final : public HamiltonianModel {
public:
    std::string name() const override { return "periodic_quad"; }
    MeasureNeeds needs() const override { return {}; }
    double value(double x, double p, const MeasureSummary&) const override {
        const double s = std::sin(2.0 * M_PI * x);
        return 0.5 * p * p - 0.5 * s * s;
    }
    double grad_p(double, double p, const MeasureSummary&) const override { return p; }
    double grad_x(double x, double, const MeasureSummary&) const override {
        return -2.0 * M_PI * std::sin(2.0 * M_PI * x) * std::cos(2.0 * M_PI * x);
    }
    double convexity_constant() const override { return 1.0; }
    double quadratic_p_coefficient() const override { return 0.5; }
};

}  // namespace

TEST_CASE("solve_hjb_linear: zero data and constant-drift transport oracle") {
    const SpatialGrid grid = SpatialGrid::torus(0.0, 1.0, 128);
    const TimeGrid tgrid = TimeGrid::make(0.25, 256);
    DensityTrajectory rho(grid, tgrid, 1.0);
    const PeriodicQuadModel model;

    // zero policy, zero terminal: u stays the accumulated potential only at
    // the terminal level; u(T) = g must hold exactly.
    std::vector<double> g(grid.n, 0.0);
    SpaceTimeField q0(grid, tgrid, 0.0);
    const SpaceTimeField u0 = solve_hjb_linear(model, q0, rho, g, 0.0, 5.0);
    for (int j = 0; j < grid.n; ++j) CHECK(u0.at(tgrid.nt, j) == 0.0);

    // characteristics: u(t, x) = g(x + c(T-t)) + int_t^T L(x + c(s-t), c) ds
    // with L(x, c) = c^2/2 + sin^2(2 pi x)/2.
    const double c = 0.4, T = tgrid.T;
    SpaceTimeField qc(grid, tgrid, c);
    std::vector<double> gs(grid.n);
    for (int j = 0; j < grid.n; ++j) gs[j] = std::sin(2.0 * M_PI * grid.center(j));
    const SpaceTimeField uc = solve_hjb_linear(model, qc, rho, gs, 0.0, 5.0);
    double worst = 0.0;
    for (int j = 0; j < grid.n; ++j) {
        const double x = grid.center(j);
        const double potential_integral =
            0.5 * (0.5 * T - (std::sin(4.0 * M_PI * (x + c * T)) - std::sin(4.0 * M_PI * x)) /
                                 (8.0 * M_PI * c));
        const double expected = std::sin(2.0 * M_PI * (x + c * T)) + 0.5 * c * c * T +
                                potential_integral;
        worst = std::max(worst, std::abs(uc.at(0, j) - expected));
    }
    CHECK(worst <= 8.0 * grid.dx);
}

TEST_CASE("policy evaluation at the optimal drift reproduces the nonlinear solve") {
    const int n = 200, nt = 400;
    const SpatialGrid grid = SpatialGrid::truncated(-5.0, 5.0, n);
    const TimeGrid tgrid = TimeGrid::make(1.0, nt);
    const auto model = make_quadratic_mean_field();
    const DensityTrajectory rho = exact_density(grid, tgrid, 0.3, 0.0, 0.04);
    std::vector<double> g(grid.n, 0.0);
    const SpaceTimeField u_hjb = solve_hjb(*model, rho, g, 0.3);
    const SpaceTimeField q_star = extract_policy(*model, u_hjb, rho);
    const SpaceTimeField u_pe = solve_hjb_linear(*model, q_star, rho, g, 0.3, 10.0);
    CHECK(sup_diff(u_hjb, u_pe, Restriction{-2.0, 2.0}) <= 10.0 * (grid.dx + tgrid.dt));
}

TEST_CASE("divergence is reported as such") {
    const SpatialGrid grid = SpatialGrid::torus(0.0, 1.0, 16);
    const TimeGrid tgrid = TimeGrid::make(1.0, 8);
    const ZeroModel model;
    DensityTrajectory rho(grid, tgrid, 1.0);
    std::vector<double> g(grid.n, 0.0);
    g[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(solve_hjb(model, rho, g, 0.0), DivergenceError);
}
