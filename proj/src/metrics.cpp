#include "vvmfg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>

namespace vvmfg {

namespace {

std::vector<double> normalized(std::span<const double> rho, const SpatialGrid& grid, int which) {
    const double mass = integrate(rho, grid);
    if (!(mass > 0.0)) {
        throw StructuralError("w1_grid: slice " + std::to_string(which) + " has nonpositive mass");
    }
    if (std::abs(mass - 1.0) > 1e-8) {
        static std::mutex log_mutex;
        std::lock_guard<std::mutex> lk(log_mutex);
        std::clog << "w1_grid: renormalizing slice with mass " << mass << "\n";
    }
    std::vector<double> out(rho.begin(), rho.end());
    for (double& v : out) v /= mass;
    return out;
}

}  // namespace

double w1_grid(std::span<const double> rho1, std::span<const double> rho2, const SpatialGrid& grid) {
    if (static_cast<int>(rho1.size()) != grid.n || static_cast<int>(rho2.size()) != grid.n) {
        throw StructuralError("w1_grid: slice length does not match grid");
    }
    const std::vector<double> a = normalized(rho1, grid, 1);
    const std::vector<double> b = normalized(rho2, grid, 2);

    const int n = grid.n;
    std::vector<double> cdf_diff(n);
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        acc += (a[j] - b[j]) * grid.dx;
        cdf_diff[j] = acc;
    }

    if (!grid.is_torus()) {
        double s = 0.0;
        for (double d : cdf_diff) s += std::abs(d);
        return s * grid.dx;
    }

    // Circular W1: cutting the torus at cell k shifts the CDF difference by the
    // constant cdf_diff[k]; the true optimum over all cuts is attained at one of
    // the n values, so scan them.
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        const double c = cdf_diff[k];
        double s = 0.0;
        for (double d : cdf_diff) s += std::abs(d - c);
        best = std::min(best, s * grid.dx);
    }
    return best;
}

double sup_t_w1(const SpaceTimeField& rho1, const SpaceTimeField& rho2) {
    if (!rho1.grid().same_as(rho2.grid()) || !rho1.tgrid().same_as(rho2.tgrid())) {
        throw StructuralError("sup_t_w1: trajectories live on different grids");
    }
    double best = 0.0;
    for (int l = 0; l < rho1.levels(); ++l) {
        best = std::max(best, w1_grid(rho1.level(l), rho2.level(l), rho1.grid()));
    }
    return best;
}

double sup_diff(const SpaceTimeField& f1, const SpaceTimeField& f2) {
    return sup_diff(f1, f2, Restriction{f1.grid().x_min, f1.grid().x_max});
}

double sup_diff(const SpaceTimeField& f1, const SpaceTimeField& f2, const Restriction& restriction) {
    if (!f1.grid().same_as(f2.grid()) || !f1.tgrid().same_as(f2.tgrid())) {
        throw StructuralError("sup_diff: fields live on different grids");
    }
    double best = 0.0;
    for (int l = 0; l < f1.levels(); ++l) {
        for (int j = 0; j < f1.n(); ++j) {
            const double x = f1.grid().center(j);
            if (x < restriction.x_lo || x > restriction.x_hi) continue;
            best = std::max(best, std::abs(f1.at(l, j) - f2.at(l, j)));
        }
    }
    return best;
}

RateFit loglog_slope(std::span<const std::pair<double, double>> beta_error_pairs) {
    if (beta_error_pairs.size() < 2) throw ConfigError("loglog_slope: need at least 2 points");
    RateFit fit;
    fit.points.reserve(beta_error_pairs.size());
    for (const auto& [beta, err] : beta_error_pairs) {
        if (!(beta > 0.0) || !(err > 0.0)) {
            std::ostringstream os;
            os << "loglog_slope: nonpositive input (beta = " << beta << ", error = " << err << ")";
            throw ConfigError(os.str());
        }
        fit.points.emplace_back(std::log(beta), std::log(err));
    }

    const double m = static_cast<double>(fit.points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : fit.points) {
        sx += x;
        sy += y;
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& [x, y] : fit.points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if (!(sxx > 0.0)) throw ConfigError("loglog_slope: all beta values coincide");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy > 0.0) {
        double ss_res = 0.0;
        for (const auto& [x, y] : fit.points) {
            const double r = y - (fit.intercept + fit.slope * x);
            ss_res += r * r;
        }
        fit.r_squared = 1.0 - ss_res / syy;
    } else {
        fit.r_squared = 1.0;  // perfectly flat data is perfectly fit
    }
    return fit;
}

}  // namespace vvmfg
