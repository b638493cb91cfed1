#ifndef VVMFG_GRID_HPP
#define VVMFG_GRID_HPP

#include <span>
#include <string>
#include <vector>

#include "vvmfg/errors.hpp"

namespace vvmfg {

// Uniform 1-D cell-centered spatial grid. Cell j owns [x_min + j*dx, x_min + (j+1)*dx)
// with center x_min + (j+1/2)*dx. Torus grids wrap index arithmetic modulo n;
// truncated grids use one-sided stencils at j = 0 and j = n-1.
struct SpatialGrid {
    enum class Kind { Torus, Truncated };

    Kind kind = Kind::Truncated;
    double x_min = 0.0;
    double x_max = 1.0;
    int n = 0;
    double dx = 0.0;

    static SpatialGrid torus(double x_min, double x_max, int n);
    static SpatialGrid truncated(double x_min, double x_max, int n);

    double length() const { return x_max - x_min; }
    double center(int j) const { return x_min + (j + 0.5) * dx; }
    double face(int j) const { return x_min + (j + 1.0) * dx; }  // face between cells j and j+1
    bool is_torus() const { return kind == Kind::Torus; }

    int wrap(int j) const {
        int m = j % n;
        return m < 0 ? m + n : m;
    }

    bool same_as(const SpatialGrid& o) const {
        return kind == o.kind && x_min == o.x_min && x_max == o.x_max && n == o.n;
    }
};

// Uniform partition of [0, T] into nt steps.
struct TimeGrid {
    double T = 1.0;
    int nt = 0;
    double dt = 0.0;

    static TimeGrid make(double T, int nt);
    double time(int level) const { return (level == nt) ? T : level * dt; }

    bool same_as(const TimeGrid& o) const { return T == o.T && nt == o.nt; }
};

// Real values indexed (time level 0..nt) x (cell 0..n-1).
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(const SpatialGrid& grid, const TimeGrid& tgrid, double fill = 0.0)
        : grid_(grid), tgrid_(tgrid), values_((tgrid.nt + 1) * static_cast<std::size_t>(grid.n), fill) {}

    const SpatialGrid& grid() const { return grid_; }
    const TimeGrid& tgrid() const { return tgrid_; }
    int levels() const { return tgrid_.nt + 1; }
    int n() const { return grid_.n; }

    double& at(int level, int j) { return values_[static_cast<std::size_t>(level) * grid_.n + j]; }
    double at(int level, int j) const { return values_[static_cast<std::size_t>(level) * grid_.n + j]; }

    std::span<double> level(int l) { return {values_.data() + static_cast<std::size_t>(l) * grid_.n, static_cast<std::size_t>(grid_.n)}; }
    std::span<const double> level(int l) const { return {values_.data() + static_cast<std::size_t>(l) * grid_.n, static_cast<std::size_t>(grid_.n)}; }

    std::vector<double>& raw() { return values_; }
    const std::vector<double>& raw() const { return values_; }

    // Throws DivergenceError naming the first offending time level.
    void check_finite(const std::string& who) const;

private:
    SpatialGrid grid_;
    TimeGrid tgrid_;
    std::vector<double> values_;
};

// Nonnegative, unit-mass fields rho(t_n, .) for all n.
class DensityTrajectory : public SpaceTimeField {
public:
    DensityTrajectory() = default;
    DensityTrajectory(const SpatialGrid& grid, const TimeGrid& tgrid, double fill = 0.0)
        : SpaceTimeField(grid, tgrid, fill) {}
    explicit DensityTrajectory(SpaceTimeField f) : SpaceTimeField(std::move(f)) {}

    // Mass within mass_tol of 1 at every level, values >= -neg_tol.
    void validate(double mass_tol = 1e-10, double neg_tol = 1e-12) const;
};

// Central differences (f_{j+1} - f_{j-1})/(2 dx) with wraparound on the torus and
// first-order one-sided stencils at truncated boundaries.
std::vector<double> gradient(std::span<const double> f, const SpatialGrid& grid);

// Second difference (f_{j+1} - 2 f_j + f_{j-1})/dx^2; homogeneous Neumann ghost
// cells at truncated boundaries.
std::vector<double> laplacian(std::span<const double> f, const SpatialGrid& grid);

// Midpoint rule: sum_j f_j dx.
double integrate(std::span<const double> f, const SpatialGrid& grid);

// First moment of a density slice: sum_j x_j f_j dx.
double mean_of(std::span<const double> rho, const SpatialGrid& grid);

// Second central moment about mean_of(rho).
double variance_of(std::span<const double> rho, const SpatialGrid& grid);

// Linear interpolation between cell centers; wraps on the torus, clamps on
// truncated grids.
double interp(std::span<const double> f, const SpatialGrid& grid, double x);

// Slope of the interpolant at x (piecewise constant between cell centers).
double interp_slope(std::span<const double> f, const SpatialGrid& grid, double x);

}  // namespace vvmfg

#endif
