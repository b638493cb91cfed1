#ifndef VVMFG_CONFIG_HPP
#define VVMFG_CONFIG_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vvmfg/coupling.hpp"
#include "vvmfg/fokker_planck.hpp"
#include "vvmfg/grid.hpp"
#include "vvmfg/hamiltonian.hpp"
#include "vvmfg/hjb.hpp"
#include "vvmfg/metrics.hpp"

namespace vvmfg {

enum class Coupler { FictitiousPlay, PolicyIteration };
enum class SolveMode { Grid, ExactOracle };

struct TerminalCostSpec {
    std::string name = "zero";  // "zero" | "quadratic"
    double center = 0.0;
    double scale = 1.0;

    std::vector<double> build(const SpatialGrid& grid) const;
};

struct ParticlesConfig {
    std::vector<long> N_list = {100};
    int seeds = 1;
    double dt = 0.01;
};

// One structured config object drives every subcommand; unknown keys are
// rejected so typos fail loudly.
struct ExperimentConfig {
    SpatialGrid::Kind domain_kind = SpatialGrid::Kind::Truncated;
    double x_min = 0.0, x_max = 1.0;
    int n = 64;
    double T = 1.0;
    int nt = 64;

    std::string model_name = "quadratic_mean_field";
    double model_scale = 0.01;          // local_separable_62
    CongestionParams congestion = {};   // congestion

    TerminalCostSpec g;
    InitialDensitySpec m0 = GaussianInit{0.0, 0.04};

    std::vector<double> betas = {0.1};

    Coupler coupler = Coupler::FictitiousPlay;
    double tol = 1e-6;
    int max_iter = 200;
    Damping damping;
    double R = 5.0;
    SolveMode mode = SolveMode::Grid;
    // Scheme of the beta = 0 reference solve in sweeps. The classical variant
    // carries the full first-order viscosity floor sqrt(2 dx^2/dt) that the
    // sweep report prints; the local variant keeps the floor at the scale of
    // the actual characteristic speeds.
    Dissipation reference_dissipation = Dissipation::LocalLaxFriedrichs;

    std::optional<Restriction> restriction;  // default: the full domain

    ParticlesConfig particles;

    std::string output_dir = "out";
    bool emit_svg = false;
    int workers = 1;
    std::uint64_t seed = 0;

    std::string hash;  // hash of the canonical JSON form

    SpatialGrid make_grid() const;
    TimeGrid make_tgrid() const;
    std::unique_ptr<HamiltonianModel> make_model() const;
    std::vector<double> make_g(const SpatialGrid& grid) const;
    std::vector<double> make_m0(const SpatialGrid& grid) const;
    Restriction effective_restriction() const;

    // Gaussian m0 parameters (closed-form oracle comparisons need them).
    double m0_mean() const;
    double m0_variance() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// FNV-1a of the canonical (sorted-key) JSON dump.
std::string hash_of_json_text(const std::string& json_text);

}  // namespace vvmfg

#endif
