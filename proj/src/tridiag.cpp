#include "vvmfg/tridiag.hpp"

#include <cmath>

namespace vvmfg {

std::vector<double> tridiag_solve(std::span<const double> a, std::span<const double> b,
                                  std::span<const double> c, std::span<const double> d) {
    const std::size_t n = b.size();
    if (a.size() != n || c.size() != n || d.size() != n) {
        throw StructuralError("tridiag_solve: diagonal/right-hand-side length mismatch");
    }
    std::vector<double> cp(n), dp(n), x(n);
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for (std::size_t j = 1; j < n; ++j) {
        const double m = b[j] - a[j] * cp[j - 1];
        cp[j] = c[j] / m;
        dp[j] = (d[j] - a[j] * dp[j - 1]) / m;
    }
    x[n - 1] = dp[n - 1];
    for (std::size_t j = n - 1; j-- > 0;) {
        x[j] = dp[j] - cp[j] * x[j + 1];
    }
    return x;
}

std::vector<double> implicit_diffusion_solve(std::span<const double> rhs, const SpatialGrid& grid,
                                             double coef) {
    const int n = grid.n;
    if (static_cast<int>(rhs.size()) != n) {
        throw StructuralError("implicit_diffusion_solve: rhs length does not match grid");
    }
    if (coef == 0.0) return std::vector<double>(rhs.begin(), rhs.end());

    const double alpha = coef / (grid.dx * grid.dx);
    std::vector<double> a(n, -alpha), b(n, 1.0 + 2.0 * alpha), c(n, -alpha);

    if (!grid.is_torus()) {
        // Neumann ghosts: the boundary rows only couple inward.
        b[0] = 1.0 + alpha;
        b[n - 1] = 1.0 + alpha;
        return tridiag_solve(a, b, c, rhs);
    }

    // Cyclic system via Sherman-Morrison: fold the corner entries (-alpha) into a
    // rank-one update u v^T with u = (gamma, 0, ..., 0, -alpha)^T scaled so the
    // reduced tridiagonal part stays diagonally dominant.
    const double gamma = -b[0];
    std::vector<double> bb(b);
    bb[0] = b[0] - gamma;
    bb[n - 1] = b[n - 1] - alpha * alpha / gamma;

    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = -alpha;

    std::vector<double> y = tridiag_solve(a, bb, c, rhs);
    std::vector<double> z = tridiag_solve(a, bb, c, u);

    // v = (1, -alpha/gamma * e_n) picks the wrapped couplings back up.
    const double vy = y[0] - alpha / gamma * y[n - 1];
    const double vz = z[0] - alpha / gamma * z[n - 1];
    const double factor = vy / (1.0 + vz);

    std::vector<double> x(n);
    for (int j = 0; j < n; ++j) x[j] = y[j] - factor * z[j];
    return x;
}

}  // namespace vvmfg
