#include <cmath>
#include <random>

#include "doctest.h"
#include "vvmfg/grid.hpp"
#include "vvmfg/tridiag.hpp"

using namespace vvmfg;

TEST_CASE("grid construction invariants") {
    CHECK_THROWS_AS(SpatialGrid::torus(0.0, 1.0, 3), ConfigError);
    CHECK_THROWS_AS(SpatialGrid::truncated(1.0, 0.0, 16), ConfigError);
    const SpatialGrid g = SpatialGrid::torus(0.0, 1.0, 8);
    CHECK(g.dx == doctest::Approx(0.125));
    CHECK(g.wrap(-1) == 7);
    CHECK(g.wrap(8) == 0);
    const TimeGrid t = TimeGrid::make(0.25, 10);
    CHECK(t.dt * t.nt == doctest::Approx(0.25));
}

TEST_CASE("gradient: constant, sine on torus, linear on truncated") {
    const SpatialGrid torus = SpatialGrid::torus(0.0, 1.0, 256);
    std::vector<double> constant(torus.n, 3.7);
    for (double v : gradient(constant, torus)) CHECK(v == 0.0);

    std::vector<double> f(torus.n);
    for (int j = 0; j < torus.n; ++j) f[j] = std::sin(2.0 * M_PI * torus.center(j));
    const std::vector<double> df = gradient(f, torus);
    const double bound = std::pow(2.0 * M_PI, 3) * torus.dx * torus.dx / 6.0;
    for (int j = 0; j < torus.n; ++j) {
        CHECK(std::abs(df[j] - 2.0 * M_PI * std::cos(2.0 * M_PI * torus.center(j))) <= bound);
    }

    const SpatialGrid trunc = SpatialGrid::truncated(-1.0, 2.0, 64);
    std::vector<double> lin(trunc.n);
    for (int j = 0; j < trunc.n; ++j) lin[j] = 3.0 * trunc.center(j);
    for (double v : gradient(lin, trunc)) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("laplacian: constant, quadratic interior, cosine") {
    const SpatialGrid torus = SpatialGrid::torus(0.0, 1.0, 256);
    std::vector<double> constant(torus.n, -2.0);
    for (double v : laplacian(constant, torus)) CHECK(v == 0.0);

    const SpatialGrid trunc = SpatialGrid::truncated(0.0, 1.0, 64);
    std::vector<double> quad(trunc.n);
    for (int j = 0; j < trunc.n; ++j) quad[j] = trunc.center(j) * trunc.center(j);
    const std::vector<double> lap = laplacian(quad, trunc);
    for (int j = 1; j < trunc.n - 1; ++j) CHECK(lap[j] == doctest::Approx(2.0).epsilon(1e-9));

    std::vector<double> f(torus.n);
    for (int j = 0; j < torus.n; ++j) f[j] = std::cos(2.0 * M_PI * torus.center(j));
    const std::vector<double> ddf = laplacian(f, torus);
    const double w = 2.0 * M_PI;
    for (int j = 0; j < torus.n; ++j) {
        CHECK(std::abs(ddf[j] + w * w * std::cos(w * torus.center(j))) <= 0.5 * w * w * w * w * torus.dx * torus.dx);
    }
}

TEST_CASE("integrate: unit constant, linear moment") {
    const SpatialGrid g = SpatialGrid::truncated(0.0, 1.0, 1000);
    std::vector<double> ones(g.n, 1.0);
    CHECK(integrate(ones, g) == doctest::Approx(1.0).epsilon(1e-14));

    std::vector<double> id(g.n);
    for (int j = 0; j < g.n; ++j) id[j] = g.center(j);
    CHECK(std::abs(integrate(id, g) - 0.5) <= 5e-4);
}

TEST_CASE("length mismatch raises a structural error") {
    const SpatialGrid g = SpatialGrid::torus(0.0, 1.0, 16);
    std::vector<double> short_slice(8, 0.0);
    CHECK_THROWS_AS(gradient(short_slice, g), StructuralError);
    CHECK_THROWS_AS(laplacian(short_slice, g), StructuralError);
    CHECK_THROWS_AS(integrate(short_slice, g), StructuralError);
}

TEST_CASE("linearity and torus telescoping hold exactly") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const SpatialGrid g = SpatialGrid::torus(-2.0, 3.0, 64);
    std::vector<double> f(g.n), h(g.n);
    for (int j = 0; j < g.n; ++j) {
        f[j] = unif(rng);
        h[j] = unif(rng);
    }
    const double a = 2.5, b = -1.25;
    std::vector<double> combo(g.n);
    for (int j = 0; j < g.n; ++j) combo[j] = a * f[j] + b * h[j];

    const auto gf = gradient(f, g), gh = gradient(h, g), gc = gradient(combo, g);
    const auto lf = laplacian(f, g), lh = laplacian(h, g), lc = laplacian(combo, g);
    for (int j = 0; j < g.n; ++j) {
        CHECK(gc[j] == doctest::Approx(a * gf[j] + b * gh[j]).epsilon(1e-12));
        CHECK(lc[j] == doctest::Approx(a * lf[j] + b * lh[j]).epsilon(1e-12));
    }

    double sum_g = 0.0, sum_l = 0.0;
    for (int j = 0; j < g.n; ++j) {
        sum_g += gf[j];
        sum_l += lf[j];
    }
    CHECK(std::abs(sum_g) <= 1e-12 / g.dx);
    CHECK(std::abs(sum_l) <= 1e-10 / (g.dx * g.dx));
    CHECK(std::abs(integrate(gf, g)) <= 1e-12);
}

TEST_CASE("implicit diffusion solve matches dense elimination and conserves mass") {
    for (const SpatialGrid g : {SpatialGrid::torus(0.0, 1.0, 24), SpatialGrid::truncated(0.0, 1.0, 24)}) {
        const double coef = 0.37 * g.dx * g.dx;  // alpha = 0.37
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<double> rhs(g.n);
        for (double& v : rhs) v = unif(rng);

        const std::vector<double> x = implicit_diffusion_solve(rhs, g, coef);

        // Dense Gaussian elimination on the explicitly assembled operator.
        const int n = g.n;
        const double alpha = coef / (g.dx * g.dx);
        std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
        for (int j = 0; j < n; ++j) {
            if (g.is_torus()) {
                A[j][j] = 1.0 + 2.0 * alpha;
                A[j][g.wrap(j - 1)] -= alpha;
                A[j][g.wrap(j + 1)] -= alpha;
            } else {
                const bool edge = (j == 0 || j == n - 1);
                A[j][j] = 1.0 + (edge ? alpha : 2.0 * alpha);
                if (j > 0) A[j][j - 1] -= alpha;
                if (j < n - 1) A[j][j + 1] -= alpha;
            }
        }
        std::vector<double> b = rhs;
        for (int col = 0; col < n; ++col) {
            int pivot = col;
            for (int r = col + 1; r < n; ++r) {
                if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
            }
            std::swap(A[col], A[pivot]);
            std::swap(b[col], b[pivot]);
            for (int r = col + 1; r < n; ++r) {
                const double m = A[r][col] / A[col][col];
                for (int c = col; c < n; ++c) A[r][c] -= m * A[col][c];
                b[r] -= m * b[col];
            }
        }
        std::vector<double> dense(n);
        for (int r = n - 1; r >= 0; --r) {
            double s = b[r];
            for (int c = r + 1; c < n; ++c) s -= A[r][c] * dense[c];
            dense[r] = s / A[r][r];
        }

        double sum_in = 0.0, sum_out = 0.0;
        for (int j = 0; j < n; ++j) {
            CHECK(x[j] == doctest::Approx(dense[j]).epsilon(1e-11));
            sum_in += rhs[j];
            sum_out += x[j];
        }
        CHECK(sum_out == doctest::Approx(sum_in).epsilon(1e-13));
    }
}

TEST_CASE("density trajectory validation") {
    const SpatialGrid g = SpatialGrid::truncated(0.0, 1.0, 8);
    const TimeGrid t = TimeGrid::make(1.0, 2);
    DensityTrajectory rho(g, t, 1.0);  // unit density
    rho.validate();
    rho.at(1, 3) = -1e-6;
    rho.at(1, 4) = 1.0 + 1e-6;
    CHECK_THROWS_AS(rho.validate(), DivergenceError);
}
