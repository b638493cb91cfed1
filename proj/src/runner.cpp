#include "vvmfg/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "vvmfg/closed_form.hpp"
#include "vvmfg/csv.hpp"
#include "vvmfg/particles.hpp"
#include "vvmfg/svg.hpp"

namespace vvmfg {

namespace fs = std::filesystem;
using nlohmann::json;
namespace cf = closed_form;

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const int i = next.fetch_add(1);
                if (i >= count) break;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.output_dir);
    return (fs::path(cfg.output_dir) / name).string();
}

MFGSolution solve_by_coupler(const ExperimentConfig& cfg, const HamiltonianModel& model,
                             std::span<const double> g, std::span<const double> m0,
                             const SpatialGrid& grid, const TimeGrid& tgrid, double beta) {
    // The beta = 0 reference is always the first-order fictitious-play solve.
    if (cfg.coupler == Coupler::PolicyIteration && beta > 0.0) {
        return solve_mfg_policy_iteration(model, g, m0, grid, tgrid, beta, cfg.R, std::nullopt,
                                          cfg.tol, cfg.max_iter);
    }
    return solve_mfg_fictitious_play(model, g, m0, grid, tgrid, beta, cfg.tol, cfg.max_iter,
                                     cfg.damping);
}

SpaceTimeField gradient_field(const SpaceTimeField& u) {
    SpaceTimeField g(u.grid(), u.tgrid());
    for (int l = 0; l < u.levels(); ++l) {
        const std::vector<double> gl = gradient(u.level(l), u.grid());
        std::copy(gl.begin(), gl.end(), g.level(l).begin());
    }
    return g;
}

void mass_stats(const DensityTrajectory& rho, double& mass_err, double& min_density) {
    mass_err = 0.0;
    min_density = 0.0;
    for (int l = 0; l < rho.levels(); ++l) {
        mass_err = std::max(mass_err, std::abs(integrate(rho.level(l), rho.grid()) - 1.0));
        for (int j = 0; j < rho.n(); ++j) min_density = std::min(min_density, rho.at(l, j));
    }
}

RateFit fit_rows(const std::vector<SweepRow>& rows, std::size_t take_first_sorted) {
    std::vector<SweepRow> sorted;
    for (const auto& r : rows) {
        if (r.converged && r.beta > 0.0 && r.sup_u_diff > 0.0) sorted.push_back(r);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const SweepRow& a, const SweepRow& b) { return a.beta < b.beta; });
    if (take_first_sorted < sorted.size()) sorted.resize(take_first_sorted);
    std::vector<std::pair<double, double>> pts;
    pts.reserve(sorted.size());
    for (const auto& r : sorted) pts.emplace_back(r.beta, r.sup_u_diff);
    return loglog_slope(pts);
}

void write_rates_csv(const std::string& path, const RateFit& all, const RateFit& half,
                     const std::string& hash) {
    CsvFile csv(path, "range,slope,intercept,r_squared,n_points,config_hash");
    csv.row({"all", fmt17(all.slope), fmt17(all.intercept), fmt17(all.r_squared),
             std::to_string(all.points.size()), hash});
    csv.row({"first_half", fmt17(half.slope), fmt17(half.intercept), fmt17(half.r_squared),
             std::to_string(half.points.size()), hash});
}

// Discretized exact Gaussian density for oracle comparisons.
std::vector<double> discretized_gaussian(const cf::GaussianParams& p, const SpatialGrid& grid) {
    std::vector<double> rho(grid.n);
    const double s = std::sqrt(p.variance);
    for (int j = 0; j < grid.n; ++j) {
        const double z = (grid.center(j) - p.mean) / s;
        rho[j] = std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * M_PI));
    }
    const double mass = integrate(rho, grid);
    for (double& v : rho) v /= mass;
    return rho;
}

}  // namespace

SweepReport run_sweep_beta(const ExperimentConfig& cfg) {
    SweepReport report;
    report.config_hash = cfg.hash;

    const SpatialGrid grid = cfg.make_grid();
    const TimeGrid tgrid = cfg.make_tgrid();
    report.dx = grid.dx;
    report.dt = tgrid.dt;
    report.lf_numerical_viscosity = std::sqrt(2.0 * grid.dx * grid.dx / tgrid.dt);

    const auto model = cfg.make_model();
    const std::vector<double> g = cfg.make_g(grid);
    const std::vector<double> m0 = cfg.make_m0(grid);
    const Restriction restriction = cfg.effective_restriction();

    report.rows.resize(cfg.betas.size());

    if (cfg.mode == SolveMode::ExactOracle) {
        const double sigma2 = cfg.m0_variance();
        for (std::size_t i = 0; i < cfg.betas.size(); ++i) {
            SweepRow& row = report.rows[i];
            row.beta = cfg.betas[i];
            row.converged = true;
            row.sup_u_diff = cf::viscosity_gap_exact(row.beta, cfg.T, 1);
            row.sup_grad_diff = 0.0;  // exact gradients coincide for all beta
            double w1 = 0.0;
            for (int l = 0; l <= tgrid.nt; ++l) {
                w1 = std::max(w1, cf::w1_gap_exact(tgrid.time(l), row.beta, sigma2, cfg.T));
            }
            row.w1_sup_t = w1;
        }
    } else {
        // The first-order reference needs the averaging: the undamped
        // best-response map can lock into a limit cycle at beta = 0.
        MFGSolution reference =
            solve_mfg_fictitious_play(*model, g, m0, grid, tgrid, 0.0, cfg.tol, cfg.max_iter,
                                      Damping{}, cfg.reference_dissipation);
        const SpaceTimeField ref_grad = gradient_field(reference.u);

        std::vector<MFGSolution> solutions(cfg.betas.size());
        parallel_for(static_cast<int>(cfg.betas.size()), cfg.workers, [&](int i) {
            solutions[i] = solve_by_coupler(cfg, *model, g, m0, grid, tgrid, cfg.betas[i]);
        });

        std::vector<SvgSeries> u_series, rho_series;
        for (std::size_t i = 0; i < cfg.betas.size(); ++i) {
            const MFGSolution& sol = solutions[i];
            SweepRow& row = report.rows[i];
            row.beta = cfg.betas[i];
            row.converged = sol.converged();
            row.iterations = sol.iterations;
            row.sup_u_diff = sup_diff(sol.u, reference.u, restriction);
            row.sup_grad_diff = sup_diff(gradient_field(sol.u), ref_grad, restriction);
            row.w1_sup_t = sup_t_w1(sol.rho, reference.rho);
            mass_stats(sol.rho, row.mass_err, row.min_density);
            if (!row.converged) ++report.failed_count;

            if (cfg.emit_svg) {
                std::vector<double> xs(grid.n), u0(grid.n), rT(grid.n);
                for (int j = 0; j < grid.n; ++j) {
                    xs[j] = grid.center(j);
                    u0[j] = sol.u.at(0, j);
                    rT[j] = sol.rho.at(tgrid.nt, j);
                }
                const std::string label = "beta=" + fmt17(row.beta).substr(0, 5);
                u_series.push_back({label, xs, u0});
                rho_series.push_back({label, xs, rT});
            }
        }
        if (cfg.emit_svg) {
            write_svg_plot(out_path(cfg, "u_snapshots.svg"), "u(0, x)", "x", "u", u_series);
            write_svg_plot(out_path(cfg, "rho_snapshots.svg"), "rho(T, x)", "x", "rho", rho_series);
        }
    }

    // Regressions over converged rows: full list, then the lower half in beta.
    const std::size_t usable =
        static_cast<std::size_t>(std::count_if(report.rows.begin(), report.rows.end(),
                                               [](const SweepRow& r) { return r.converged; }));
    if (usable >= 2) {
        report.fit_all = fit_rows(report.rows, report.rows.size());
        const std::size_t half = std::max<std::size_t>(2, (usable + 1) / 2);
        report.fit_half = fit_rows(report.rows, half);
        report.have_fits = true;
    }

    report.sweep_csv = out_path(cfg, "sweep_beta.csv");
    {
        CsvFile csv(report.sweep_csv,
                    "beta,sup_u_diff,sup_grad_diff,w1_sup_t,iterations,status,config_hash");
        for (const SweepRow& row : report.rows) {
            csv.row({fmt17(row.beta), fmt17(row.sup_u_diff), fmt17(row.sup_grad_diff),
                     fmt17(row.w1_sup_t), std::to_string(row.iterations),
                     row.converged ? "converged" : "failed", cfg.hash});
        }
    }
    report.rates_csv = out_path(cfg, "rates.csv");
    if (report.have_fits) {
        write_rates_csv(report.rates_csv, report.fit_all, report.fit_half, cfg.hash);
    } else {
        CsvFile csv(report.rates_csv, "range,slope,intercept,r_squared,n_points,config_hash");
    }

    if (cfg.emit_svg && report.have_fits) {
        SvgSeries scatter{"sup|u^b - u^0|", {}, {}, true};
        for (const auto& [lb, le] : report.fit_all.points) {
            scatter.x.push_back(lb);
            scatter.y.push_back(le);
        }
        SvgSeries line{"fit", {}, {}, false};
        if (!scatter.x.empty()) {
            const double lo = *std::min_element(scatter.x.begin(), scatter.x.end());
            const double hi = *std::max_element(scatter.x.begin(), scatter.x.end());
            line.x = {lo, hi};
            line.y = {report.fit_all.intercept + report.fit_all.slope * lo,
                      report.fit_all.intercept + report.fit_all.slope * hi};
        }
        write_svg_plot(out_path(cfg, "rates_loglog.svg"), "log error against log beta", "log beta",
                       "log error", {scatter, line});
    }
    return report;
}

OracleReport run_oracle_check(const ExperimentConfig& cfg, bool refine) {
    if (cfg.model_name != "quadratic_mean_field") {
        throw ConfigError("oracle-check: requires the quadratic_mean_field model");
    }
    OracleReport report;
    report.config_hash = cfg.hash;
    report.beta = cfg.betas.front();
    const double m = cfg.m0_mean();
    const double sigma2 = cfg.m0_variance();

    struct LevelResult {
        double sup_u = 0.0, sup_u_full = 0.0, w1 = 0.0, grad = 0.0;
        int iterations = 0;
        bool converged = false;
        double mass_err = 0.0, min_density = 0.0;
    };
    auto solve_level = [&](int n, int nt) {
        ExperimentConfig c = cfg;
        c.n = n;
        c.nt = nt;
        const SpatialGrid grid = c.make_grid();
        const TimeGrid tgrid = c.make_tgrid();
        const auto model = c.make_model();
        const std::vector<double> g = c.make_g(grid);
        const std::vector<double> m0 = c.make_m0(grid);
        const MFGSolution sol = solve_mfg_fictitious_play(*model, g, m0, grid, tgrid, report.beta,
                                                          c.tol, c.max_iter, c.damping);
        LevelResult res;
        res.converged = sol.converged();
        res.iterations = sol.iterations;
        mass_stats(sol.rho, res.mass_err, res.min_density);

        const Restriction restriction = cfg.effective_restriction();
        for (int l = 0; l <= tgrid.nt; ++l) {
            const double t = tgrid.time(l);
            const auto exact = cf::rho_exact_params(t, report.beta, m, sigma2, cfg.T);
            res.w1 = std::max(res.w1, w1_grid(sol.rho.level(l), discretized_gaussian(exact, grid), grid));
            const std::vector<double> grad_num = gradient(sol.u.level(l), grid);
            for (int j = 0; j < grid.n; ++j) {
                const double x = grid.center(j);
                const double ue = cf::u_exact(t, x, report.beta, m, cfg.T, 1);
                const double du = std::abs(sol.u.at(l, j) - ue);
                res.sup_u_full = std::max(res.sup_u_full, du);
                if (x >= restriction.x_lo && x <= restriction.x_hi) {
                    res.sup_u = std::max(res.sup_u, du);
                    res.grad = std::max(res.grad,
                                        std::abs(grad_num[j] - cf::grad_u_exact(t, x, m, cfg.T)));
                }
            }
        }
        return res;
    };

    const LevelResult coarse = solve_level(cfg.n, cfg.nt);
    report.sup_u_err = coarse.sup_u;
    report.sup_u_err_full = coarse.sup_u_full;
    report.w1_sup_t = coarse.w1;
    report.grad_sup_err = coarse.grad;
    report.iterations = coarse.iterations;
    report.converged = coarse.converged;
    report.mass_err = coarse.mass_err;
    report.min_density = coarse.min_density;

    // Self-audits of the closed form at probe points scattered by the config seed.
    {
        const double h = 1e-4;
        std::uint64_t k = 0;
        const Restriction restriction = cfg.effective_restriction();
        for (int probe = 0; probe < 100; ++probe) {
            const double t = (0.05 + 0.9 * rng::uniform01(cfg.seed, 11, k++)) * cfg.T;
            const double x = restriction.x_lo +
                             rng::uniform01(cfg.seed, 12, k++) * (restriction.x_hi - restriction.x_lo);
            const double beta = report.beta;
            auto u_at = [&](double tt, double xx) { return cf::u_exact(tt, xx, beta, m, cfg.T, 1); };
            const double ut = (u_at(t + h, x) - u_at(t - h, x)) / (2 * h);
            const double ux = (u_at(t, x + h) - u_at(t, x - h)) / (2 * h);
            const double uxx = (u_at(t, x + h) - 2 * u_at(t, x) + u_at(t, x - h)) / (h * h);
            const double pde =
                -ut + 0.5 * ux * ux - 0.5 * (x - m) * (x - m) - 0.5 * beta * beta * uxx;
            report.audit_pde_residual = std::max(report.audit_pde_residual, std::abs(pde));

            auto var_at = [&](double tt) { return cf::rho_exact_params(tt, beta, m, sigma2, cfg.T).variance; };
            const double dvar = (var_at(t + h) - var_at(t - h)) / (2 * h);
            const double ode = dvar - (-4.0 * cf::curvature(t, cfg.T) * var_at(t) + beta * beta);
            report.audit_variance_ode = std::max(report.audit_variance_ode, std::abs(ode));

            const double x2 = restriction.x_lo +
                              rng::uniform01(cfg.seed, 13, k++) * (restriction.x_hi - restriction.x_lo);
            const double gap1 = u_at(t, x) - cf::u_exact(t, x, 0.0, m, cfg.T, 1);
            const double gap2 = u_at(t, x2) - cf::u_exact(t, x2, 0.0, m, cfg.T, 1);
            report.audit_grad_beta_gap = std::max(report.audit_grad_beta_gap, std::abs(gap1 - gap2));
        }
    }

    if (refine) {
        const LevelResult fine = solve_level(2 * cfg.n, 2 * cfg.nt);
        report.refined = true;
        report.fine_sup_u_err = fine.sup_u;
        report.fine_w1_sup_t = fine.w1;
        report.order_u = fine.sup_u > 0.0 ? coarse.sup_u / fine.sup_u : 0.0;
        report.order_w1 = fine.w1 > 0.0 ? coarse.w1 / fine.w1 : 0.0;
    }

    report.report_json = out_path(cfg, "oracle_check.json");
    json j{{"beta", report.beta},
           {"sup_u_err", report.sup_u_err},
           {"sup_u_err_full_domain", report.sup_u_err_full},
           {"w1_sup_t", report.w1_sup_t},
           {"grad_sup_err", report.grad_sup_err},
           {"iterations", report.iterations},
           {"converged", report.converged},
           {"mass_err", report.mass_err},
           {"min_density", report.min_density},
           {"audit_pde_residual", report.audit_pde_residual},
           {"audit_variance_ode", report.audit_variance_ode},
           {"audit_grad_beta_gap", report.audit_grad_beta_gap},
           {"config_hash", report.config_hash}};
    if (report.refined) {
        j["fine_sup_u_err"] = report.fine_sup_u_err;
        j["fine_w1_sup_t"] = report.fine_w1_sup_t;
        j["order_u"] = report.order_u;
        j["order_w1"] = report.order_w1;
    }
    std::ofstream(report.report_json) << j.dump(2) << "\n";
    return report;
}

ParticlesReport run_particles(const ExperimentConfig& cfg) {
    ParticlesReport report;
    report.config_hash = cfg.hash;

    const SpatialGrid grid = cfg.make_grid();
    const TimeGrid tgrid = cfg.make_tgrid();
    const auto model = cfg.make_model();
    const std::vector<double> g = cfg.make_g(grid);
    const std::vector<double> m0 = cfg.make_m0(grid);

    const bool exact_reference = cfg.model_name == "quadratic_mean_field" &&
                                 std::holds_alternative<GaussianInit>(cfg.m0);
    double m_mean = 0.0, sigma2 = 0.0;
    if (exact_reference) {
        m_mean = cfg.m0_mean();
        sigma2 = cfg.m0_variance();
    }

    // One solve per beta drives the particles; a beta = 0 solve provides the
    // grid reference when the closed form does not apply.
    std::vector<MFGSolution> solutions(cfg.betas.size());
    parallel_for(static_cast<int>(cfg.betas.size()), cfg.workers, [&](int i) {
        solutions[i] = solve_by_coupler(cfg, *model, g, m0, grid, tgrid, cfg.betas[i]);
    });
    MFGSolution reference;
    if (!exact_reference) {
        reference = solve_mfg_fictitious_play(*model, g, m0, grid, tgrid, 0.0, cfg.tol,
                                              cfg.max_iter, Damping{}, cfg.reference_dissipation);
    }

    struct Cell {
        std::size_t beta_idx;
        long N;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (std::size_t bi = 0; bi < cfg.betas.size(); ++bi) {
        for (long N : cfg.particles.N_list) {
            for (int s = 0; s < cfg.particles.seeds; ++s) {
                cells.push_back({bi, N, cfg.seed + static_cast<std::uint64_t>(s)});
            }
        }
    }

    struct CellResult {
        std::vector<double> times;
        std::vector<double> w1_beta;
        std::vector<double> w1_zero;
        double sup_beta = 0.0, sup_zero = 0.0;
        long clamps = 0;
    };
    std::vector<CellResult> results(cells.size());

    const int nsteps = std::max(1, static_cast<int>(std::llround(tgrid.T / cfg.particles.dt)));
    NPlayerOptions opts;
    opts.store_every = std::max(1, nsteps / 16);

    parallel_for(static_cast<int>(cells.size()), cfg.workers, [&](int ci) {
        const Cell& cell = cells[ci];
        const MFGSolution& sol = solutions[cell.beta_idx];
        const double beta = cfg.betas[cell.beta_idx];
        const NPlayerResult sim = simulate_nplayer(*model, sol, static_cast<int>(cell.N),
                                                   cfg.particles.dt, cell.seed, opts);
        CellResult res;
        res.clamps = sim.clamp_count;
        for (std::size_t k = 0; k < sim.snapshots.size(); ++k) {
            const double t = sim.snapshot_times[k];
            const auto& xs = sim.snapshots[k].positions;
            double wb, wz;
            if (exact_reference) {
                wb = empirical_w1(xs, cf::rho_exact_params(t, beta, m_mean, sigma2, cfg.T));
                wz = empirical_w1(xs, cf::rho_exact_params(t, 0.0, m_mean, sigma2, cfg.T));
            } else {
                const int lvl = std::clamp(static_cast<int>(std::llround(t / tgrid.dt)), 0, tgrid.nt);
                wb = empirical_w1(xs, sol.rho.level(lvl), grid);
                wz = empirical_w1(xs, reference.rho.level(lvl), grid);
            }
            res.times.push_back(t);
            res.w1_beta.push_back(wb);
            res.w1_zero.push_back(wz);
            res.sup_beta = std::max(res.sup_beta, wb);
            res.sup_zero = std::max(res.sup_zero, wz);
        }
        results[ci] = std::move(res);
    });

    report.particles_csv = out_path(cfg, "particles.csv");
    CsvFile csv(report.particles_csv, "N,beta,seed,t,w1_to_rho_beta,w1_to_rho_0");
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        const Cell& cell = cells[ci];
        const CellResult& res = results[ci];
        report.total_clamps += res.clamps;
        for (std::size_t k = 0; k < res.times.size(); ++k) {
            csv.row({std::to_string(cell.N), fmt17(cfg.betas[cell.beta_idx]),
                     std::to_string(cell.seed), fmt17(res.times[k]), fmt17(res.w1_beta[k]),
                     fmt17(res.w1_zero[k])});
        }
    }

    // Seed averages per (beta, N).
    std::size_t ci = 0;
    for (std::size_t bi = 0; bi < cfg.betas.size(); ++bi) {
        for (long N : cfg.particles.N_list) {
            ParticlesCellSummary s;
            s.beta = cfg.betas[bi];
            s.N = N;
            for (int k = 0; k < cfg.particles.seeds; ++k, ++ci) {
                s.mean_sup_w1_beta += results[ci].sup_beta;
                s.mean_sup_w1_zero += results[ci].sup_zero;
            }
            s.mean_sup_w1_beta /= cfg.particles.seeds;
            s.mean_sup_w1_zero /= cfg.particles.seeds;
            report.summary.push_back(s);
        }
    }

    if (cfg.particles.N_list.size() >= 2) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& s : report.summary) {
            if (s.beta == cfg.betas.front()) {
                pts.emplace_back(static_cast<double>(s.N), s.mean_sup_w1_zero);
            }
        }
        report.slope_in_N = loglog_slope(pts);
        report.have_slope_in_N = true;
    }
    if (cfg.betas.size() >= 2) {
        const long n_max = *std::max_element(cfg.particles.N_list.begin(), cfg.particles.N_list.end());
        std::vector<std::pair<double, double>> pts;
        for (const auto& s : report.summary) {
            if (s.N == n_max && s.beta > 0.0) pts.emplace_back(s.beta, s.mean_sup_w1_zero);
        }
        if (pts.size() >= 2) {
            report.slope_in_beta = loglog_slope(pts);
            report.have_slope_in_beta = true;
        }
    }
    return report;
}

PolicyIterationReport run_policy_iteration(const ExperimentConfig& cfg) {
    PolicyIterationReport report;
    report.config_hash = cfg.hash;

    const SpatialGrid grid = cfg.make_grid();
    const TimeGrid tgrid = cfg.make_tgrid();
    const auto model = cfg.make_model();
    const std::vector<double> g = cfg.make_g(grid);
    const std::vector<double> m0 = cfg.make_m0(grid);
    const double beta = cfg.betas.front();

    const MFGSolution pi = solve_mfg_policy_iteration(*model, g, m0, grid, tgrid, beta, cfg.R,
                                                      std::nullopt, cfg.tol, cfg.max_iter);
    report.history = pi.history;
    report.iterations = pi.iterations;
    report.converged = pi.converged();

    report.residuals_csv = out_path(cfg, "pi_residuals.csv");
    CsvFile csv(report.residuals_csv, "iteration,hj_residual,fp_weak_residual,policy_change,config_hash");
    for (const IterationRecord& rec : report.history) {
        csv.row({std::to_string(rec.iteration), fmt17(rec.hj_residual), fmt17(rec.fp_weak_residual),
                 fmt17(rec.policy_change), cfg.hash});
    }

    // Geometric mean of policy-change ratios over the post-burn-in window. The
    // iteration may contract all the way to a bitwise-stationary policy, so the
    // window is capped at the last iteration with a positive residual; reaching
    // exact zero inside the window counts as complete decay.
    report.window_lo = 3;
    int last_positive = -1;
    for (std::size_t k = 0; k < report.history.size(); ++k) {
        if (report.history[k].policy_change > 0.0) last_positive = static_cast<int>(k);
    }
    report.window_hi = std::min(10, last_positive);
    if (last_positive < report.window_lo &&
        static_cast<int>(report.history.size()) > report.window_lo) {
        report.gm_ratio = 0.0;  // residual died before the window opened
    } else if (report.window_hi > report.window_lo) {
        const double first = report.history[report.window_lo].policy_change;
        const double last = report.history[report.window_hi].policy_change;
        if (first > 0.0 && last > 0.0) {
            report.gm_ratio =
                std::exp(std::log(last / first) / (report.window_hi - report.window_lo));
        }
    }

    const MFGSolution fp = solve_mfg_fictitious_play(*model, g, m0, grid, tgrid, beta, cfg.tol,
                                                     cfg.max_iter, cfg.damping);
    report.fictitious_play_converged = fp.converged();
    report.sup_u_diff_vs_fictitious_play = sup_diff(pi.u, fp.u, cfg.effective_restriction());
    return report;
}

FBSDEReport run_fbsde(const ExperimentConfig& cfg) {
    FBSDEReport report;
    report.config_hash = cfg.hash;
    report.seeds = cfg.particles.seeds;

    const double beta = cfg.betas.front();
    const double x0_offset = 1.0;

    auto level_stats = [&](int n, int nt, double dt_particle) {
        ExperimentConfig c = cfg;
        c.n = n;
        c.nt = nt;
        const SpatialGrid grid = c.make_grid();
        const TimeGrid tgrid = c.make_tgrid();
        const auto model = c.make_model();
        const std::vector<double> g = c.make_g(grid);
        const std::vector<double> m0 = c.make_m0(grid);
        const MFGSolution sol = solve_by_coupler(c, *model, g, m0, grid, tgrid, beta);

        const double x0 = std::clamp(cfg.m0_mean() + x0_offset, grid.x_min + grid.dx,
                                     grid.x_max - grid.dx);
        // Antithetic pairs: each seed runs with its mirror path, which cancels
        // the zero-mean martingale part of the defect and leaves the
        // discretization bias measurable above the Monte Carlo floor. One pair
        // average is one independent sample for the standard error.
        const int pairs = std::max(1, cfg.particles.seeds / 2);
        std::vector<std::vector<double>> pair_defect(pairs);
        std::vector<double> sup_abs(pairs, 0.0);
        parallel_for(pairs, cfg.workers, [&](int k) {
            const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(k);
            const FBSDEPath a = simulate_fbsde(*model, sol, x0, dt_particle, seed, false);
            const FBSDEPath b = simulate_fbsde(*model, sol, x0, dt_particle, seed, true);
            pair_defect[k].resize(a.defect.size());
            for (std::size_t s = 0; s < a.defect.size(); ++s) {
                pair_defect[k][s] = 0.5 * (a.defect[s] + b.defect[s]);
            }
            for (double r : a.residual) sup_abs[k] = std::max(sup_abs[k], r);
            for (double r : b.residual) sup_abs[k] = std::max(sup_abs[k], r);
        });

        FBSDELevel lvl;
        lvl.dx = grid.dx;
        lvl.dt = dt_particle;
        const std::size_t steps = pair_defect[0].size();
        for (std::size_t s = 0; s < steps; ++s) {
            double mean = 0.0;
            for (int k = 0; k < pairs; ++k) mean += pair_defect[k][s];
            mean /= pairs;
            double var = 0.0;
            for (int k = 0; k < pairs; ++k) {
                const double d = pair_defect[k][s] - mean;
                var += d * d;
            }
            const double se = pairs > 1 ? std::sqrt(var / (pairs - 1.0) / pairs) : 0.0;
            lvl.sup_mean_defect = std::max(lvl.sup_mean_defect, std::abs(mean));
            lvl.sup_se = std::max(lvl.sup_se, se);
        }
        for (int k = 0; k < pairs; ++k) lvl.mean_sup_abs += sup_abs[k];
        lvl.mean_sup_abs /= pairs;
        return lvl;
    };

    report.coarse = level_stats(cfg.n, cfg.nt, cfg.particles.dt);
    report.fine = level_stats(2 * cfg.n, 2 * cfg.nt, 0.5 * cfg.particles.dt);
    report.halving_ratio = report.fine.sup_mean_defect > 0.0
                               ? report.coarse.sup_mean_defect / report.fine.sup_mean_defect
                               : 0.0;

    report.report_json = out_path(cfg, "fbsde_report.json");
    json j{{"beta", beta},
           {"seeds", report.seeds},
           {"coarse", {{"dx", report.coarse.dx},
                       {"dt", report.coarse.dt},
                       {"sup_mean_defect", report.coarse.sup_mean_defect},
                       {"sup_se", report.coarse.sup_se},
                       {"mean_sup_abs", report.coarse.mean_sup_abs}}},
           {"fine", {{"dx", report.fine.dx},
                     {"dt", report.fine.dt},
                     {"sup_mean_defect", report.fine.sup_mean_defect},
                     {"sup_se", report.fine.sup_se},
                     {"mean_sup_abs", report.fine.mean_sup_abs}}},
           {"halving_ratio", report.halving_ratio},
           {"config_hash", report.config_hash}};
    std::ofstream(report.report_json) << j.dump(2) << "\n";
    return report;
}

namespace {

CheckLine line(const std::string& name, bool pass, const std::string& detail) {
    return {name, pass, detail};
}

std::string num2(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::vector<CheckLine> check_sweep(const SweepReport& report, const ExperimentConfig& cfg) {
    std::vector<CheckLine> out;
    out.push_back(line("sweep: no failed solves", report.failed_count == 0,
                       std::to_string(report.failed_count) + " failed"));
    for (const SweepRow& row : report.rows) {
        if (row.mass_err > 1e-10 || row.min_density < -1e-12) {
            out.push_back(line("sweep: conservation/positivity", false,
                               "beta=" + num2(row.beta) + " mass_err=" + num2(row.mass_err) +
                                   " min_density=" + num2(row.min_density)));
        }
    }
    if (out.size() == 1) {
        out.push_back(line("sweep: conservation/positivity", true, "all rows within 1e-10 / -1e-12"));
    }

    if (!report.have_fits) {
        out.push_back(line("sweep: rate fits available", false, "fewer than 2 converged rows"));
        return out;
    }

    if (cfg.model_name == "quadratic_mean_field" && cfg.mode == SolveMode::ExactOracle) {
        out.push_back(line("sweep: exact-oracle slope = 2 within 1e-9",
                           std::abs(report.fit_all.slope - 2.0) <= 1e-9,
                           "slope=" + fmt17(report.fit_all.slope)));
        out.push_back(line("sweep: exact-oracle r^2 >= 1 - 1e-12",
                           report.fit_all.r_squared >= 1.0 - 1e-12,
                           "r2=" + fmt17(report.fit_all.r_squared)));
    } else if (cfg.model_name == "quadratic_mean_field") {
        out.push_back(line("sweep: grid slope in [1.7, 2.3]",
                           report.fit_all.slope >= 1.7 && report.fit_all.slope <= 2.3,
                           "slope=" + num2(report.fit_all.slope)));
        const double grad_bound = 10.0 * (report.dx + report.dt);
        bool grad_ok = true;
        double worst = 0.0;
        for (const SweepRow& row : report.rows) {
            worst = std::max(worst, row.sup_grad_diff);
            if (row.converged && row.sup_grad_diff > grad_bound) grad_ok = false;
        }
        out.push_back(line("sweep: gradient gap <= 10(dx+dt) for every beta", grad_ok,
                           "worst=" + num2(worst) + " bound=" + num2(grad_bound)));
    } else if (cfg.model_name == "local_separable_62") {
        out.push_back(line("sweep: full-range slope in [0.90, 1.30]",
                           report.fit_all.slope >= 0.90 && report.fit_all.slope <= 1.30,
                           "slope=" + num2(report.fit_all.slope)));
        out.push_back(line("sweep: half-range slope >= full - 0.05",
                           report.fit_half.slope >= report.fit_all.slope - 0.05,
                           "half=" + num2(report.fit_half.slope) +
                               " full=" + num2(report.fit_all.slope)));
    }
    return out;
}

std::vector<CheckLine> check_oracle(const OracleReport& report, const ExperimentConfig& cfg) {
    std::vector<CheckLine> out;
    out.push_back(line("oracle: solve converged", report.converged,
                       std::to_string(report.iterations) + " iterations"));
    out.push_back(line("oracle: sup|u - u_exact| <= 0.05", report.sup_u_err <= 0.05,
                       "err=" + num2(report.sup_u_err)));
    out.push_back(line("oracle: sup-t W1(rho, rho_exact) <= 0.02", report.w1_sup_t <= 0.02,
                       "err=" + num2(report.w1_sup_t)));
    out.push_back(line("oracle: mass within 1e-10, density >= -1e-12",
                       report.mass_err <= 1e-10 && report.min_density >= -1e-12,
                       "mass_err=" + num2(report.mass_err)));
    out.push_back(line("oracle: closed-form self-audits <= 1e-4",
                       report.audit_pde_residual <= 1e-4 && report.audit_variance_ode <= 1e-4 &&
                           report.audit_grad_beta_gap <= 1e-10,
                       "pde=" + num2(report.audit_pde_residual) +
                           " ode=" + num2(report.audit_variance_ode)));
    if (report.refined) {
        const bool ok_u = report.order_u >= 1.6 && report.order_u <= 2.6;
        const bool ok_w1 = report.order_w1 >= 1.6 && report.order_w1 <= 2.6;
        out.push_back(line("oracle: refinement ratio in [1.6, 2.6]", ok_u && ok_w1,
                           "u ratio=" + num2(report.order_u) + " w1 ratio=" + num2(report.order_w1)));
    }
    (void)cfg;
    return out;
}

std::vector<CheckLine> check_particles(const ParticlesReport& report, const ExperimentConfig& cfg) {
    std::vector<CheckLine> out;
    std::vector<ParticlesCellSummary> first_beta;
    for (const auto& s : report.summary) {
        if (s.beta == cfg.betas.front()) first_beta.push_back(s);
    }
    std::sort(first_beta.begin(), first_beta.end(),
              [](const auto& a, const auto& b) { return a.N < b.N; });
    bool monotone = true;
    for (std::size_t i = 1; i < first_beta.size(); ++i) {
        if (first_beta[i].mean_sup_w1_zero > first_beta[i - 1].mean_sup_w1_zero) monotone = false;
    }
    out.push_back(line("particles: seed-averaged W1 monotone non-increasing in N", monotone,
                       std::to_string(first_beta.size()) + " N values"));
    if (first_beta.size() >= 2) {
        const double hi = first_beta.front().mean_sup_w1_zero;
        const double lo = first_beta.back().mean_sup_w1_zero;
        out.push_back(line("particles: W1 at largest N <= W1 at smallest N / 3", lo <= hi / 3.0,
                           "W1(" + std::to_string(first_beta.front().N) + ")=" + num2(hi) + " W1(" +
                               std::to_string(first_beta.back().N) + ")=" + num2(lo)));
    }
    return out;
}

std::vector<CheckLine> check_policy_iteration(const PolicyIterationReport& report,
                                              const ExperimentConfig& cfg) {
    std::vector<CheckLine> out;
    out.push_back(line("policy iteration: geometric residual ratio <= 0.8 on iterations 3-10",
                       report.gm_ratio >= 0.0 && report.gm_ratio <= 0.8,
                       "ratio=" + num2(report.gm_ratio)));
    const SpatialGrid grid = cfg.make_grid();
    const TimeGrid tgrid = cfg.make_tgrid();
    const double bound = 10.0 * (grid.dx + tgrid.dt);
    out.push_back(line("policy iteration: final u matches fictitious play within 10(dx+dt)",
                       report.fictitious_play_converged &&
                           report.sup_u_diff_vs_fictitious_play <= bound,
                       "diff=" + num2(report.sup_u_diff_vs_fictitious_play) +
                           " bound=" + num2(bound)));
    return out;
}

std::vector<CheckLine> check_fbsde(const FBSDEReport& report, const ExperimentConfig& cfg) {
    std::vector<CheckLine> out;
    const double bound = 10.0 * (report.coarse.dt + report.coarse.dx) + 3.0 * report.coarse.sup_se;
    out.push_back(line("fbsde: seed-averaged decoupling residual <= 10(dt+dx) + 3 SE",
                       report.coarse.sup_mean_defect <= bound,
                       "resid=" + num2(report.coarse.sup_mean_defect) + " bound=" + num2(bound)));
    out.push_back(line("fbsde: residual halves under refinement (within 40%)",
                       report.halving_ratio >= 1.2 && report.halving_ratio <= 2.8,
                       "ratio=" + num2(report.halving_ratio)));
    (void)cfg;
    return out;
}

bool all_pass(const std::vector<CheckLine>& lines) {
    return std::all_of(lines.begin(), lines.end(), [](const CheckLine& l) { return l.pass; });
}

}  // namespace vvmfg
