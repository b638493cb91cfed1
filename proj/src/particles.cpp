#include "vvmfg/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vvmfg {

namespace rng {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

namespace {
std::uint64_t mix3(std::uint64_t seed, std::uint64_t stream, std::uint64_t step) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ step);
}
double to_unit(std::uint64_t h) { return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53; }
}  // namespace

double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t step) {
    return to_unit(mix3(seed, stream, step));
}

double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t step) {
    const std::uint64_t h1 = mix3(seed, stream, step);
    const std::uint64_t h2 = splitmix64(h1);
    const double u1 = to_unit(h1);
    const double u2 = to_unit(h2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace rng

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("inverse_normal_cdf: p must lie in (0, 1)");

    // Acklam's rational approximation, then two Halley refinements.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    for (int it = 0; it < 2; ++it) {
        const double e = normal_cdf(x) - p;
        const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

namespace {

// Time-interpolated value of a per-level slice stack at (t, x).
double interp_tx(const std::vector<std::vector<double>>& levels, const SpatialGrid& grid,
                 const TimeGrid& tgrid, double t, double x) {
    double s = std::clamp(t, 0.0, tgrid.T) / tgrid.dt;
    const int l0 = std::min(static_cast<int>(std::floor(s)), tgrid.nt - 1);
    const double w = s - l0;
    const double v0 = interp(levels[l0], grid, x);
    const double v1 = interp(levels[l0 + 1], grid, x);
    return (1.0 - w) * v0 + w * v1;
}

std::vector<std::vector<double>> gradient_stack(const SpaceTimeField& u) {
    std::vector<std::vector<double>> g(u.levels());
    for (int l = 0; l < u.levels(); ++l) g[l] = gradient(u.level(l), u.grid());
    return g;
}

int nearest_level(const TimeGrid& tgrid, double t) {
    return std::clamp(static_cast<int>(std::llround(t / tgrid.dt)), 0, tgrid.nt);
}

// Smoothed histogram density of the ensemble on the solver grid.
std::vector<double> histogram_density(std::span<const double> xs, const SpatialGrid& grid) {
    std::vector<double> h(grid.n, 0.0);
    const double w = 1.0 / (static_cast<double>(xs.size()) * grid.dx);
    for (double x : xs) {
        int j = static_cast<int>(std::floor((x - grid.x_min) / grid.dx));
        j = std::clamp(j, 0, grid.n - 1);
        h[j] += w;
    }
    // one triangular [1 2 1]/4 smoothing pass
    std::vector<double> out(grid.n);
    for (int j = 0; j < grid.n; ++j) {
        const int jl = grid.is_torus() ? grid.wrap(j - 1) : std::max(j - 1, 0);
        const int jr = grid.is_torus() ? grid.wrap(j + 1) : std::min(j + 1, grid.n - 1);
        out[j] = 0.25 * h[jl] + 0.5 * h[j] + 0.25 * h[jr];
    }
    const double mass = integrate(out, grid);
    if (mass > 0.0) {
        for (double& v : out) v /= mass;
    }
    return out;
}

MeasureSummary measure_from_ensemble(const HamiltonianModel& model, std::span<const double> xs,
                                     const SpatialGrid& grid) {
    const MeasureNeeds needs = model.needs();
    if (needs.mean && !needs.local_density && !needs.convolved) {
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
        return MeasureSummary::mean_only(mean);
    }
    return build_measure(model, histogram_density(xs, grid), grid);
}

// Quantile of a unit-mass grid density with the CDF linear across each cell;
// used to draw initial positions without quantizing them to cell centers.
double grid_quantile_linear(std::span<const double> rho, const SpatialGrid& grid, double p) {
    double acc = 0.0;
    for (int j = 0; j < grid.n; ++j) {
        const double cell_mass = rho[j] * grid.dx;
        if (acc + cell_mass >= p) {
            if (cell_mass <= 0.0) return grid.x_min + j * grid.dx;
            return grid.x_min + j * grid.dx + (p - acc) / rho[j];
        }
        acc += cell_mass;
    }
    return grid.x_max;
}

// Quantile of the grid density read as atoms at cell centers (step CDF by
// cumulative sum): a point mass in one cell transports at zero cost to atoms
// sitting at that cell's center.
double grid_quantile_atomic(std::span<const double> rho, const SpatialGrid& grid, double p) {
    double acc = 0.0;
    for (int j = 0; j < grid.n; ++j) {
        acc += rho[j] * grid.dx;
        if (acc >= p) return grid.center(j);
    }
    return grid.center(grid.n - 1);
}

}  // namespace

NPlayerResult simulate_nplayer(const HamiltonianModel& model, const MFGSolution& solution,
                               int num_particles, double dt, std::uint64_t seed,
                               const NPlayerOptions& opts) {
    if (num_particles < 1) throw ConfigError("simulate_nplayer: need at least one particle");
    if (!(dt > 0.0)) throw ConfigError("simulate_nplayer: dt must be positive");

    const SpatialGrid& grid = solution.u.grid();
    const TimeGrid& tgrid = solution.u.tgrid();
    const int nsteps = std::max(1, static_cast<int>(std::llround(tgrid.T / dt)));

    std::vector<std::uint64_t> streams;
    if (opts.streams) {
        if (static_cast<int>(opts.streams->size()) != num_particles) {
            throw ConfigError("simulate_nplayer: stream list length mismatch");
        }
        streams = *opts.streams;
    } else {
        streams.resize(num_particles);
        std::iota(streams.begin(), streams.end(), 0);
    }

    std::vector<double> xs(num_particles);
    if (opts.initial_positions) {
        if (static_cast<int>(opts.initial_positions->size()) != num_particles) {
            throw ConfigError("simulate_nplayer: initial position list length mismatch");
        }
        xs = *opts.initial_positions;
    } else {
        for (int i = 0; i < num_particles; ++i) {
            const double p = rng::uniform01(seed, streams[i], 0);
            xs[i] = grid_quantile_linear(solution.rho.level(0), grid, p);
        }
    }

    const std::vector<std::vector<double>> grad_u = gradient_stack(solution.u);
    const double noise_scale = solution.beta * std::sqrt(dt);

    NPlayerResult result;
    const int store_every = std::max(1, opts.store_every);
    auto store = [&](int step) {
        result.snapshots.push_back({xs, step, seed, solution.beta});
        result.snapshot_times.push_back(std::min(step * dt, tgrid.T));
    };
    store(0);

    std::vector<double> drift(num_particles);
    for (int s = 0; s < nsteps; ++s) {
        const double t = s * dt;
        MeasureSummary mu = opts.feedback == MeasureFeedback::Empirical
                                ? measure_from_ensemble(model, xs, grid)
                                : build_measure(model, solution.rho.level(nearest_level(tgrid, t)), grid);
        for (int i = 0; i < num_particles; ++i) {
            const double y = -interp_tx(grad_u, grid, tgrid, t, xs[i]);
            drift[i] = model.grad_p(xs[i], y, mu);
        }
        for (int i = 0; i < num_particles; ++i) {
            double x = xs[i] + dt * drift[i] + noise_scale * rng::gaussian(seed, streams[i], s + 1);
            if (x < grid.x_min || x > grid.x_max) {
                ++result.clamp_count;
                x = std::clamp(x, grid.x_min, grid.x_max);
            }
            xs[i] = x;
        }
        if ((s + 1) % store_every == 0 || s + 1 == nsteps) store(s + 1);
    }
    return result;
}

FBSDEPath simulate_fbsde(const HamiltonianModel& model, const MFGSolution& solution, double x0,
                         double dt, std::uint64_t seed, bool antithetic) {
    const SpatialGrid& grid = solution.u.grid();
    const TimeGrid& tgrid = solution.u.tgrid();
    if (x0 < grid.x_min || x0 > grid.x_max) {
        throw ConfigError("simulate_fbsde: x0 outside the domain");
    }
    if (!(dt > 0.0)) throw ConfigError("simulate_fbsde: dt must be positive");

    const int nsteps = std::max(1, static_cast<int>(std::llround(tgrid.T / dt)));
    const std::vector<std::vector<double>> grad_u = gradient_stack(solution.u);
    const double noise_scale = (antithetic ? -1.0 : 1.0) * solution.beta * std::sqrt(dt);

    FBSDEPath path;
    path.times.resize(nsteps + 1);
    path.X.resize(nsteps + 1);
    path.Y.resize(nsteps + 1);
    path.defect.resize(nsteps + 1);
    path.residual.resize(nsteps + 1);
    std::vector<double> gxh(nsteps + 1, 0.0);

    double x = x0;
    for (int s = 0; s <= nsteps; ++s) {
        const double t = std::min(s * dt, tgrid.T);
        path.times[s] = t;
        path.X[s] = x;
        const double y = -interp_tx(grad_u, grid, tgrid, t, x);
        path.Y[s] = y;
        const MeasureSummary mu =
            build_measure(model, solution.rho.level(nearest_level(tgrid, t)), grid);
        gxh[s] = model.grad_x(x, y, mu);
        if (s < nsteps) {
            const double drift = model.grad_p(x, y, mu);
            x += dt * drift + noise_scale * rng::gaussian(seed, 0, s + 1);
            x = std::clamp(x, grid.x_min, grid.x_max);
        }
    }

    // r(t_s) = Y(t_s) - Y(T) - int_{t_s}^T grad_x H ds, left-point quadrature.
    double tail = 0.0;
    path.defect[nsteps] = 0.0;
    path.residual[nsteps] = 0.0;
    for (int s = nsteps - 1; s >= 0; --s) {
        tail += dt * gxh[s];
        path.defect[s] = path.Y[s] - path.Y[nsteps] - tail;
        path.residual[s] = std::abs(path.defect[s]);
    }
    return path;
}

double empirical_w1(std::span<const double> atoms, std::span<const double> rho_slice,
                    const SpatialGrid& grid) {
    if (atoms.empty()) throw ConfigError("empirical_w1: empty ensemble");
    std::vector<double> rho(rho_slice.begin(), rho_slice.end());
    const double mass = integrate(rho, grid);
    if (!(mass > 0.0)) throw StructuralError("empirical_w1: reference slice has nonpositive mass");
    for (double& v : rho) v /= mass;

    std::vector<double> sorted(atoms.begin(), atoms.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double p = (static_cast<double>(i) + 0.5) / n;
        acc += std::abs(sorted[i] - grid_quantile_atomic(rho, grid, p));
    }
    return acc / n;
}

double empirical_w1(std::span<const double> atoms, const closed_form::GaussianParams& ref) {
    if (atoms.empty()) throw ConfigError("empirical_w1: empty ensemble");
    const double s = std::sqrt(ref.variance);
    std::vector<double> sorted(atoms.begin(), atoms.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double p = (static_cast<double>(i) + 0.5) / n;
        acc += std::abs(sorted[i] - (ref.mean + s * inverse_normal_cdf(p)));
    }
    return acc / n;
}

double empirical_w1_atoms(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ConfigError("empirical_w1_atoms: empty ensemble");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());

    // Sweep the merged support; between consecutive atoms the CDF difference is
    // constant, so W1 = sum |F_a - F_b| * segment length.
    const double wa = 1.0 / static_cast<double>(sa.size());
    const double wb = 1.0 / static_cast<double>(sb.size());
    std::size_t ia = 0, ib = 0;
    double fa = 0.0, fb = 0.0, acc = 0.0;
    double prev = std::min(sa[0], sb[0]);
    while (ia < sa.size() || ib < sb.size()) {
        double x;
        if (ib >= sb.size() || (ia < sa.size() && sa[ia] <= sb[ib])) {
            x = sa[ia];
        } else {
            x = sb[ib];
        }
        acc += std::abs(fa - fb) * (x - prev);
        prev = x;
        while (ia < sa.size() && sa[ia] == x) {
            fa += wa;
            ++ia;
        }
        while (ib < sb.size() && sb[ib] == x) {
            fb += wb;
            ++ib;
        }
    }
    return acc;
}

}  // namespace vvmfg
