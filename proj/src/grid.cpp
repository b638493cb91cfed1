#include "vvmfg/grid.hpp"

#include <cmath>
#include <sstream>

namespace vvmfg {

namespace {

SpatialGrid make_grid(SpatialGrid::Kind kind, double x_min, double x_max, int n) {
    if (n < 4) throw ConfigError("SpatialGrid: cell count must be >= 4, got " + std::to_string(n));
    if (!(x_max > x_min)) throw ConfigError("SpatialGrid: x_max must exceed x_min");
    SpatialGrid g;
    g.kind = kind;
    g.x_min = x_min;
    g.x_max = x_max;
    g.n = n;
    g.dx = (x_max - x_min) / n;
    return g;
}

void require_length(std::span<const double> f, const SpatialGrid& grid, const char* who) {
    if (static_cast<int>(f.size()) != grid.n) {
        std::ostringstream os;
        os << who << ": slice length " << f.size() << " does not match grid cell count " << grid.n;
        throw StructuralError(os.str());
    }
}

}  // namespace

SpatialGrid SpatialGrid::torus(double x_min, double x_max, int n) {
    return make_grid(Kind::Torus, x_min, x_max, n);
}

SpatialGrid SpatialGrid::truncated(double x_min, double x_max, int n) {
    return make_grid(Kind::Truncated, x_min, x_max, n);
}

TimeGrid TimeGrid::make(double T, int nt) {
    if (nt < 1) throw ConfigError("TimeGrid: step count must be >= 1");
    if (!(T > 0.0)) throw ConfigError("TimeGrid: horizon must be positive");
    TimeGrid g;
    g.T = T;
    g.nt = nt;
    g.dt = T / nt;
    return g;
}

void SpaceTimeField::check_finite(const std::string& who) const {
    for (int l = 0; l < levels(); ++l) {
        for (int j = 0; j < n(); ++j) {
            if (!std::isfinite(at(l, j))) {
                std::ostringstream os;
                os << who << ": non-finite value at time level " << l << ", cell " << j;
                throw DivergenceError(os.str());
            }
        }
    }
}

void DensityTrajectory::validate(double mass_tol, double neg_tol) const {
    for (int l = 0; l < levels(); ++l) {
        double mass = integrate(level(l), grid());
        if (std::abs(mass - 1.0) > mass_tol) {
            std::ostringstream os;
            os << "DensityTrajectory: mass " << mass << " at level " << l << " deviates from 1 beyond " << mass_tol;
            throw DivergenceError(os.str());
        }
        for (int j = 0; j < n(); ++j) {
            if (at(l, j) < -neg_tol) {
                std::ostringstream os;
                os << "DensityTrajectory: negative density " << at(l, j) << " at level " << l << ", cell " << j;
                throw DivergenceError(os.str());
            }
        }
    }
}

std::vector<double> gradient(std::span<const double> f, const SpatialGrid& grid) {
    require_length(f, grid, "gradient");
    const int n = grid.n;
    const double inv2dx = 1.0 / (2.0 * grid.dx);
    std::vector<double> out(n);
    if (grid.is_torus()) {
        for (int j = 0; j < n; ++j) {
            out[j] = (f[grid.wrap(j + 1)] - f[grid.wrap(j - 1)]) * inv2dx;
        }
    } else {
        out[0] = (f[1] - f[0]) / grid.dx;
        for (int j = 1; j < n - 1; ++j) out[j] = (f[j + 1] - f[j - 1]) * inv2dx;
        out[n - 1] = (f[n - 1] - f[n - 2]) / grid.dx;
    }
    return out;
}

std::vector<double> laplacian(std::span<const double> f, const SpatialGrid& grid) {
    require_length(f, grid, "laplacian");
    const int n = grid.n;
    const double invdx2 = 1.0 / (grid.dx * grid.dx);
    std::vector<double> out(n);
    if (grid.is_torus()) {
        for (int j = 0; j < n; ++j) {
            out[j] = (f[grid.wrap(j + 1)] - 2.0 * f[j] + f[grid.wrap(j - 1)]) * invdx2;
        }
    } else {
        out[0] = (f[1] - f[0]) * invdx2;  // ghost f_{-1} = f_0
        for (int j = 1; j < n - 1; ++j) out[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) * invdx2;
        out[n - 1] = (f[n - 2] - f[n - 1]) * invdx2;
    }
    return out;
}

double integrate(std::span<const double> f, const SpatialGrid& grid) {
    require_length(f, grid, "integrate");
    double s = 0.0;
    for (double v : f) s += v;
    return s * grid.dx;
}

double mean_of(std::span<const double> rho, const SpatialGrid& grid) {
    require_length(rho, grid, "mean_of");
    double s = 0.0;
    for (int j = 0; j < grid.n; ++j) s += grid.center(j) * rho[j];
    return s * grid.dx;
}

double variance_of(std::span<const double> rho, const SpatialGrid& grid) {
    const double m = mean_of(rho, grid);
    double s = 0.0;
    for (int j = 0; j < grid.n; ++j) {
        const double d = grid.center(j) - m;
        s += d * d * rho[j];
    }
    return s * grid.dx;
}

double interp(std::span<const double> f, const SpatialGrid& grid, double x) {
    require_length(f, grid, "interp");
    const int n = grid.n;
    double s = (x - grid.x_min) / grid.dx - 0.5;  // fractional cell-center index
    if (grid.is_torus()) {
        const double fn = static_cast<double>(n);
        s -= std::floor(s / fn) * fn;
        int j0 = static_cast<int>(std::floor(s));
        double w = s - j0;
        j0 = grid.wrap(j0);
        const int j1 = grid.wrap(j0 + 1);
        return (1.0 - w) * f[j0] + w * f[j1];
    }
    if (s <= 0.0) return f[0];
    if (s >= n - 1.0) return f[n - 1];
    const int j0 = static_cast<int>(std::floor(s));
    const double w = s - j0;
    return (1.0 - w) * f[j0] + w * f[j0 + 1];
}

double interp_slope(std::span<const double> f, const SpatialGrid& grid, double x) {
    require_length(f, grid, "interp_slope");
    const int n = grid.n;
    double s = (x - grid.x_min) / grid.dx - 0.5;
    if (grid.is_torus()) {
        const double fn = static_cast<double>(n);
        s -= std::floor(s / fn) * fn;
        int j0 = grid.wrap(static_cast<int>(std::floor(s)));
        const int j1 = grid.wrap(j0 + 1);
        return (f[j1] - f[j0]) / grid.dx;
    }
    if (s <= 0.0 || s >= n - 1.0) return 0.0;  // constant extension outside the centers
    const int j0 = static_cast<int>(std::floor(s));
    return (f[j0 + 1] - f[j0]) / grid.dx;
}

}  // namespace vvmfg
