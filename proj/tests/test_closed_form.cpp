#include <cmath>
#include <random>

#include "doctest.h"
#include "vvmfg/closed_form.hpp"
#include "vvmfg/errors.hpp"

using namespace vvmfg;
namespace cf = closed_form;

TEST_CASE("u_exact terminal condition and direct values") {
    for (double beta : {0.0, 0.3, 1.0}) {
        for (double x : {-2.0, 0.0, 5.0}) {
            CHECK(cf::u_exact(1.0, x, beta, 0.0, 1.0, 1) == doctest::Approx(0.0).epsilon(1e-15));
        }
    }
    // t = 0, x - m = 1, beta = 0, T = 1: (e^2 - 1) / (2 (e^2 + 1)), evaluated
    // independently from the exponential form.
    const double e2 = std::exp(2.0);
    const double expected = (e2 - 1.0) / (2.0 * (e2 + 1.0));
    CHECK(expected == doctest::Approx(0.380797).epsilon(1e-5));
    CHECK(cf::u_exact(0.0, 1.0, 0.0, 0.0, 1.0, 1) == doctest::Approx(expected).epsilon(1e-14));

    // vector form matches scalar form in d = 3 via |x - m|^2
    const std::vector<double> x{1.0, 2.0, 2.0}, m{1.0, 0.0, 0.0};
    const double r2 = 8.0;
    const double scalar = cf::curvature(0.3, 1.0) * r2 +
                          (cf::u_exact(0.3, 0.0, 0.5, 0.0, 1.0, 3) - 0.0);
    CHECK(cf::u_exact(0.3, x, 0.5, m, 1.0) == doctest::Approx(scalar).epsilon(1e-14));

    CHECK_THROWS_AS(cf::u_exact(1.5, 0.0, 0.1, 0.0, 1.0, 1), ConfigError);
}

TEST_CASE("u^beta - u^0 is x-independent") {
    for (double t : {0.0, 0.25, 0.8}) {
        const double gap1 = cf::u_exact(t, -3.0, 0.4, 0.0, 1.0, 1) - cf::u_exact(t, -3.0, 0.0, 0.0, 1.0, 1);
        const double gap2 = cf::u_exact(t, 7.0, 0.4, 0.0, 1.0, 1) - cf::u_exact(t, 7.0, 0.0, 0.0, 1.0, 1);
        CHECK(gap1 == doctest::Approx(gap2).epsilon(1e-14));
    }
}

TEST_CASE("rho_exact_params: initial condition, terminal value, positivity") {
    for (double beta : {0.0, 0.2, 0.7}) {
        const auto p = cf::rho_exact_params(0.0, beta, 0.5, 0.04, 1.0);
        CHECK(p.mean == 0.5);
        CHECK(p.variance == doctest::Approx(0.04).epsilon(1e-14));
    }
    // beta = 0, t = T = 1, sigma^2 = 0.04: 0.04 (2e/(e^2+1))^2, evaluated
    // directly from the exponentials.
    const double e2 = std::exp(2.0);
    const double expected = 0.04 * std::pow(2.0 * std::exp(1.0) / (e2 + 1.0), 2);
    CHECK(expected == doctest::Approx(0.016799).epsilon(1e-4));
    CHECK(cf::rho_exact_params(1.0, 0.0, 0.0, 0.04, 1.0).variance ==
          doctest::Approx(expected).epsilon(1e-13));

    for (int k = 0; k <= 50; ++k) {
        const double t = k / 50.0;
        const double var = cf::rho_exact_params(t, 0.3, 0.0, 0.04, 1.0).variance;
        CHECK(var > 0.0);
    }
    CHECK_THROWS_AS(cf::rho_exact_params(0.5, 0.1, 0.0, -1.0, 1.0), ConfigError);
}

TEST_CASE("viscosity gap: zero at beta 0, exact beta^2 scaling, direct value") {
    CHECK(cf::viscosity_gap_exact(0.0, 1.0, 1) == 0.0);
    for (double beta : {0.1, 0.25, 0.7}) {
        for (double T : {0.5, 1.0, 10.0}) {
            CHECK(cf::viscosity_gap_exact(2.0 * beta, T, 1) ==
                  doctest::Approx(4.0 * cf::viscosity_gap_exact(beta, T, 1)).epsilon(1e-14));
        }
    }
    // T = 1, d = 1, beta = 0.3: 0.045 ln((e^2+1)/(2e))
    const double e2 = std::exp(2.0);
    const double expected = 0.045 * std::log((e2 + 1.0) / (2.0 * std::exp(1.0)));
    CHECK(expected == doctest::Approx(0.019520).epsilon(1e-4));
    CHECK(cf::viscosity_gap_exact(0.3, 1.0, 1) == doctest::Approx(expected).epsilon(1e-14));

    // cross-check: grid maximization of |u^beta - u^0| over t
    double best = 0.0;
    for (int k = 0; k <= 1000; ++k) {
        const double t = k / 1000.0;
        best = std::max(best, std::abs(cf::u_exact(t, 0.3, 0.3, 0.3, 1.0, 1) -
                                       cf::u_exact(t, 0.3, 0.0, 0.3, 1.0, 1)));
    }
    CHECK(best == doctest::Approx(cf::viscosity_gap_exact(0.3, 1.0, 1)).epsilon(1e-12));

    // large T stays finite (stable hyperbolic evaluation)
    CHECK(std::isfinite(cf::viscosity_gap_exact(0.5, 20.0, 3)));
    CHECK(std::isfinite(cf::u_exact(0.1, 2.0, 0.5, 0.0, 20.0, 3)));
}

namespace {

// independent W1 oracle: integrate |Phi_1 - Phi_2| over a wide bracket
double w1_gaussians_by_cdf(double m1, double s1, double m2, double s2) {
    auto cdf = [](double x, double m, double s) {
        return 0.5 * std::erfc(-(x - m) / (s * std::sqrt(2.0)));
    };
    const double lo = std::min(m1 - 10 * s1, m2 - 10 * s2);
    const double hi = std::max(m1 + 10 * s1, m2 + 10 * s2);
    const int n = 200000;
    const double h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = lo + (i + 0.5) * h;
        acc += std::abs(cdf(x, m1, s1) - cdf(x, m2, s2));
    }
    return acc * h;
}

}  // namespace

TEST_CASE("w1_gap_exact: trivial zeros and CDF-integration oracle") {
    CHECK(cf::w1_gap_exact(0.0, 0.5, 0.04, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(cf::w1_gap_exact(0.7, 0.0, 0.04, 1.0) == doctest::Approx(0.0).epsilon(1e-15));

    const double t = 1.0, beta = 0.3, sigma2 = 0.04, T = 1.0;
    const double s_b = std::sqrt(cf::rho_exact_params(t, beta, 0.0, sigma2, T).variance);
    const double s_0 = std::sqrt(cf::rho_exact_params(t, 0.0, 0.0, sigma2, T).variance);
    const double oracle = w1_gaussians_by_cdf(0.0, s_b, 0.0, s_0);
    CHECK(std::abs(cf::w1_gap_exact(t, beta, sigma2, T) - oracle) <= 1e-6);
}

TEST_CASE("closed form self-audit: PDE residual by finite differences") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> ut(0.05, 0.95), ux(-2.0, 2.0), ub(0.05, 0.8);
    const double h = 1e-4, m = 0.2, T = 1.0;
    for (int probe = 0; probe < 100; ++probe) {
        const double t = ut(rng), x = ux(rng), beta = ub(rng);
        auto u = [&](double tt, double xx) { return cf::u_exact(tt, xx, beta, m, T, 1); };
        const double u_t = (u(t + h, x) - u(t - h, x)) / (2 * h);
        const double u_x = (u(t, x + h) - u(t, x - h)) / (2 * h);
        const double u_xx = (u(t, x + h) - 2 * u(t, x) + u(t, x - h)) / (h * h);
        const double resid = -u_t + 0.5 * u_x * u_x - 0.5 * (x - m) * (x - m) -
                             0.5 * beta * beta * u_xx;
        CHECK(std::abs(resid) <= 1e-4);
    }
}

TEST_CASE("closed form self-audit: variance ODE") {
    std::mt19937_64 rng(321);
    std::uniform_real_distribution<double> ut(0.05, 0.95), ub(0.0, 0.8);
    const double h = 1e-4, sigma2 = 0.04, T = 1.0;
    for (int probe = 0; probe < 100; ++probe) {
        const double t = ut(rng), beta = ub(rng);
        auto var = [&](double tt) { return cf::rho_exact_params(tt, beta, 0.0, sigma2, T).variance; };
        const double dvar = (var(t + h) - var(t - h)) / (2 * h);
        const double rhs = -4.0 * cf::curvature(t, T) * var(t) + beta * beta;
        CHECK(std::abs(dvar - rhs) <= 1e-4);
    }
}

TEST_CASE("w1 gap obeys a beta^2 bound on (0, 1]") {
    // C from a sweep of the exact formula: the ratio peaks as beta -> 0 at t = T.
    double c = 0.0;
    for (int bi = 1; bi <= 100; ++bi) {
        const double beta = bi / 100.0;
        for (int ti = 0; ti <= 100; ++ti) {
            const double t = ti / 100.0;
            c = std::max(c, cf::w1_gap_exact(t, beta, 0.04, 1.0) / (beta * beta));
        }
    }
    CHECK(c < 2.4);
    CHECK(c > 2.0);
}
