#ifndef VVMFG_CLOSED_FORM_HPP
#define VVMFG_CLOSED_FORM_HPP

#include <span>

namespace vvmfg {

// Exact solution of the quadratic mean-field model: value function
//
//   u^beta(t, x) = (e^{2T-t} - e^t) / (2 (e^{2T-t} + e^t)) |x - m|^2
//                  - (beta^2 d / 2) ln( 2 e^T / (e^{2T-t} + e^t) )
//
// and Gaussian density N(m, var(t) I). Everything below evaluates the
// exponential expressions in hyperbolic form, which is exact to rounding and
// does not overflow for large T:
//
//   u^beta(t, x)  = (1/2) tanh(T-t) |x-m|^2 + (beta^2 d / 2) ln cosh(T-t)
//   var(t)        = sigma^2 cosh^2(T-t)/cosh^2(T) + beta^2 cosh(T-t) sinh(t)/cosh(T)
namespace closed_form {

struct GaussianParams {
    double mean;
    double variance;
};

// Quadratic coefficient of u^beta: (1/2) tanh(T - t). Shared with tests.
double curvature(double t, double T);

double u_exact(double t, std::span<const double> x, double beta, std::span<const double> m, double T);

// 1-D convenience overload; d scales the beta^2 log term and |x-m|^2 stays scalar.
double u_exact(double t, double x, double beta, double m, double T, int d = 1);

// Spatial gradient, beta-independent: tanh(T-t) (x - m).
double grad_u_exact(double t, double x, double m, double T);

GaussianParams rho_exact_params(double t, double beta, double m, double sigma2, double T);

// sup over (t, x) of |u^beta - u^0| = (beta^2 d / 2) ln cosh(T), attained at t = 0.
double viscosity_gap_exact(double beta, double T, int d);

// W1 of two same-mean Gaussians: sqrt(2/pi) |s_beta(t) - s_0(t)|.
double w1_gap_exact(double t, double beta, double sigma2, double T);

}  // namespace closed_form
}  // namespace vvmfg

#endif
