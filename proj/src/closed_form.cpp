#include "vvmfg/closed_form.hpp"

#include <cmath>
#include <string>

#include "vvmfg/errors.hpp"

namespace vvmfg::closed_form {

namespace {

void require_time(double t, double T) {
    if (!(t >= 0.0 && t <= T)) {
        throw ConfigError("closed_form: t = " + std::to_string(t) + " outside [0, " + std::to_string(T) + "]");
    }
}

// ln cosh without overflow for large |z|.
double log_cosh(double z) {
    const double a = std::abs(z);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

}  // namespace

double curvature(double t, double T) { return 0.5 * std::tanh(T - t); }

double u_exact(double t, std::span<const double> x, double beta, std::span<const double> m, double T) {
    require_time(t, T);
    if (x.size() != m.size()) throw StructuralError("u_exact: x and m dimension mismatch");
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - m[i];
        r2 += d * d;
    }
    const int d = static_cast<int>(x.size());
    return curvature(t, T) * r2 + 0.5 * beta * beta * d * log_cosh(T - t);
}

double u_exact(double t, double x, double beta, double m, double T, int d) {
    require_time(t, T);
    const double r = x - m;
    return curvature(t, T) * r * r + 0.5 * beta * beta * d * log_cosh(T - t);
}

double grad_u_exact(double t, double x, double m, double T) {
    require_time(t, T);
    return std::tanh(T - t) * (x - m);
}

GaussianParams rho_exact_params(double t, double beta, double m, double sigma2, double T) {
    require_time(t, T);
    if (!(sigma2 > 0.0)) throw ConfigError("rho_exact_params: variance must be positive");
    const double c = std::cosh(T - t) / std::cosh(T);
    const double var = sigma2 * c * c + beta * beta * std::cosh(T - t) * std::sinh(t) / std::cosh(T);
    return {m, var};
}

double viscosity_gap_exact(double beta, double T, int d) {
    return 0.5 * beta * beta * d * log_cosh(T);
}

double w1_gap_exact(double t, double beta, double sigma2, double T) {
    const double s_beta = std::sqrt(rho_exact_params(t, beta, 0.0, sigma2, T).variance);
    const double s_zero = std::sqrt(rho_exact_params(t, 0.0, 0.0, sigma2, T).variance);
    return std::sqrt(2.0 / M_PI) * std::abs(s_beta - s_zero);
}

}  // namespace vvmfg::closed_form
