#ifndef VVMFG_HAMILTONIAN_HPP
#define VVMFG_HAMILTONIAN_HPP

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vvmfg/grid.hpp"

namespace vvmfg {

struct MeasureNeeds {
    bool mean = false;
    bool local_density = false;
    bool convolved = false;
};

// Snapshot of the features of a density slice that a Hamiltonian evaluates:
// first moment, the slice itself (interpolated linearly between cell centers),
// and optionally a mollified slice (phi * mu). Immutable once built.
class MeasureSummary {
public:
    MeasureSummary() = default;

    static MeasureSummary mean_only(double mean);
    static MeasureSummary from_slice(std::span<const double> rho, const SpatialGrid& grid,
                                     const MeasureNeeds& needs);

    bool has_mean() const { return has_mean_; }
    bool has_local_density() const { return !local_density_.empty(); }
    bool has_convolved() const { return !convolved_.empty(); }

    double mean() const;
    double density_at(double x) const;
    double density_slope_at(double x) const;
    double convolved_at(double x) const;
    double convolved_slope_at(double x) const;

    std::span<const double> local_density() const { return local_density_; }
    std::span<const double> convolved() const { return convolved_; }
    const SpatialGrid& grid() const;

    // Used by from_slice when the model declares a convolution kernel.
    void set_convolved(std::vector<double> values);

private:
    bool has_mean_ = false;
    double mean_ = 0.0;
    std::vector<double> local_density_;
    std::vector<double> convolved_;
    std::optional<SpatialGrid> grid_;
};

// Evaluation set {H, grad_p H, grad_x H, Lagrangian argmax} of a Hamiltonian
// H(x, p, mu). Models are immutable after construction and safe to share
// across threads.
class HamiltonianModel {
public:
    virtual ~HamiltonianModel() = default;

    virtual std::string name() const = 0;
    virtual MeasureNeeds needs() const = 0;

    virtual double value(double x, double p, const MeasureSummary& mu) const = 0;
    virtual double grad_p(double x, double p, const MeasureSummary& mu) const = 0;
    virtual double grad_x(double x, double p, const MeasureSummary& mu) const = 0;

    // Lower bound c0 on d^2H/dp^2; positive iff the model is uniformly convex in p.
    virtual double convexity_constant() const = 0;

    // Gamma when the p-dependence is exactly Gamma p^2 plus p-free terms;
    // 0 marks models without that structure.
    virtual double quadratic_p_coefficient() const { return 0.0; }

    // (max_p of p q - H(x, p, mu), maximizing p). |q| <= R is assumed.
    // Closed form p* = q / (2 Gamma) for quadratic-in-p models; other models
    // raise UnsupportedError.
    virtual std::pair<double, double> lagrangian_max(double x, double q, const MeasureSummary& mu,
                                                     double R) const;

    // Mollifier of the measure argument; half-width 0 means no convolution.
    virtual double conv_halfwidth() const { return 0.0; }
    virtual double conv_kernel(double /*y*/) const { return 0.0; }
};

// H(x, p, mu) = 1/2 |p|^2 - 1/2 (x - mean(mu))^2.
std::unique_ptr<HamiltonianModel> make_quadratic_mean_field();

// H = scale { |p|^2 - mu(x)^2 - cos(4 pi x) - 0.1 cos(2 pi x) - 0.1 sin(2 pi (x - pi/8)^2) }.
std::unique_ptr<HamiltonianModel> make_local_separable(double scale = 0.01);

struct CongestionParams {
    double gamma_scale = 1.0;   // Gamma, the quadratic coefficient
    double eta = 0.1;
    double conv_halfwidth = 0.1;
};

// H = Gamma |p|^2 + gamma(p) / |eta + F((phi * mu)(x))| + G(x) with
// gamma(p) = 1/(1+p^2), F(r) = |r|, G(x) = cos(2 pi x), phi a triangular bump.
std::unique_ptr<HamiltonianModel> make_congestion(const CongestionParams& params = {});

std::unique_ptr<HamiltonianModel> make_model_by_name(const std::string& name);

// Builds the measure features a model declares from one density slice.
MeasureSummary build_measure(const HamiltonianModel& model, std::span<const double> rho,
                             const SpatialGrid& grid);

}  // namespace vvmfg

#endif
