#ifndef VVMFG_RUNNER_HPP
#define VVMFG_RUNNER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vvmfg/config.hpp"
#include "vvmfg/metrics.hpp"

namespace vvmfg {

// Runs fn(0..count-1) on up to `workers` threads. Work items must not share
// mutable state; results keyed by index keep output order deterministic no
// matter the thread layout.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

struct SweepRow {
    double beta = 0.0;
    double sup_u_diff = 0.0;
    double sup_grad_diff = 0.0;
    double w1_sup_t = 0.0;
    int iterations = 0;
    bool converged = false;
    double mass_err = 0.0;     // max |mass - 1| over the trajectory
    double min_density = 0.0;  // most negative node value
};

struct SweepReport {
    std::vector<SweepRow> rows;
    bool have_fits = false;
    RateFit fit_all;
    RateFit fit_half;
    double lf_numerical_viscosity = 0.0;  // sqrt(2 dx^2 / dt), the first-order scheme's floor
    double dx = 0.0, dt = 0.0;
    int failed_count = 0;
    std::string config_hash;
    // files written
    std::string sweep_csv, rates_csv;
};

// For each beta: solve the MFG, compare (u, grad u, rho) against the beta = 0
// first-order reference on the configured restriction, and regress the errors
// against beta over the full list and its lower half. In exact-oracle mode the
// errors come from the closed-form gap instead of grid solves.
SweepReport run_sweep_beta(const ExperimentConfig& cfg);

struct OracleReport {
    double beta = 0.0;
    double sup_u_err = 0.0;       // on the configured restriction
    double sup_u_err_full = 0.0;  // on the whole domain (boundary layers included)
    double w1_sup_t = 0.0;
    double grad_sup_err = 0.0;
    int iterations = 0;
    bool converged = false;
    double mass_err = 0.0;
    double min_density = 0.0;
    // closed-form self-audits
    double audit_pde_residual = 0.0;
    double audit_variance_ode = 0.0;
    double audit_grad_beta_gap = 0.0;
    // refinement (doubled n and nt)
    bool refined = false;
    double fine_sup_u_err = 0.0;
    double fine_w1_sup_t = 0.0;
    double order_u = 0.0;   // error ratio coarse/fine
    double order_w1 = 0.0;
    std::string config_hash;
    std::string report_json;
};

// Solves the quadratic mean-field configuration and reports solver-vs-exact
// errors plus the oracle's internal consistency checks; refine = true runs a
// second level with doubled n and nt.
OracleReport run_oracle_check(const ExperimentConfig& cfg, bool refine);

struct ParticlesCellSummary {
    double beta = 0.0;
    long N = 0;
    double mean_sup_w1_beta = 0.0;  // seed average of sup-t W1(empirical, rho^beta)
    double mean_sup_w1_zero = 0.0;  // seed average of sup-t W1(empirical, rho^0)
};

struct ParticlesReport {
    std::vector<ParticlesCellSummary> summary;  // ordered (beta, N) as configured
    bool have_slope_in_N = false;
    RateFit slope_in_N;  // first beta, mean_sup_w1_zero against N
    bool have_slope_in_beta = false;
    RateFit slope_in_beta;  // largest N, mean_sup_w1_zero against beta
    long total_clamps = 0;
    std::string config_hash;
    std::string particles_csv;
};

ParticlesReport run_particles(const ExperimentConfig& cfg);

struct PolicyIterationReport {
    std::vector<IterationRecord> history;
    int iterations = 0;
    bool converged = false;
    double gm_ratio = -1.0;  // geometric mean of policy-change ratios; 0 marks
                             // complete decay, negative marks "window unavailable"
    int window_lo = 0, window_hi = 0;
    double sup_u_diff_vs_fictitious_play = 0.0;
    bool fictitious_play_converged = false;
    std::string config_hash;
    std::string residuals_csv;
};

PolicyIterationReport run_policy_iteration(const ExperimentConfig& cfg);

struct FBSDELevel {
    double dx = 0.0, dt = 0.0;
    double sup_mean_defect = 0.0;  // sup_t |seed average of the signed defect|
    double sup_se = 0.0;           // sup_t standard error of that average
    double mean_sup_abs = 0.0;     // seed average of sup_t |defect| (martingale included)
};

struct FBSDEReport {
    FBSDELevel coarse, fine;
    double halving_ratio = 0.0;  // coarse.sup_mean_defect / fine.sup_mean_defect
    int seeds = 0;
    std::string config_hash;
    std::string report_json;
};

FBSDEReport run_fbsde(const ExperimentConfig& cfg);

struct CheckLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Acceptance thresholds for --check mode, keyed off the configured model/mode.
std::vector<CheckLine> check_sweep(const SweepReport& report, const ExperimentConfig& cfg);
std::vector<CheckLine> check_oracle(const OracleReport& report, const ExperimentConfig& cfg);
std::vector<CheckLine> check_particles(const ParticlesReport& report, const ExperimentConfig& cfg);
std::vector<CheckLine> check_policy_iteration(const PolicyIterationReport& report,
                                              const ExperimentConfig& cfg);
std::vector<CheckLine> check_fbsde(const FBSDEReport& report, const ExperimentConfig& cfg);

bool all_pass(const std::vector<CheckLine>& lines);

// Frozen constant of the exact density rate bound sup-t W1 <= C beta^2 on
// beta <= 0.5, T = 1, sigma^2 = 0.04: the sweep of the exact variance formulas
// peaks at t = T as beta -> 0 with C = sqrt(2/pi) * cosh(0) sinh(1) /
// (2 sigma / cosh(1)) ~= 2.344; frozen with margin.
inline constexpr double kW1ExactRateConstant = 2.4;

}  // namespace vvmfg

#endif
