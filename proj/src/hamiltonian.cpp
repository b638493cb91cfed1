#include "vvmfg/hamiltonian.hpp"

#include <cmath>

#include "vvmfg/errors.hpp"

namespace vvmfg {

MeasureSummary MeasureSummary::mean_only(double mean) {
    MeasureSummary m;
    m.has_mean_ = true;
    m.mean_ = mean;
    return m;
}

MeasureSummary MeasureSummary::from_slice(std::span<const double> rho, const SpatialGrid& grid,
                                          const MeasureNeeds& needs) {
    MeasureSummary m;
    m.grid_ = grid;
    if (needs.mean) {
        m.has_mean_ = true;
        m.mean_ = mean_of(rho, grid);
    }
    if (needs.local_density || needs.convolved) {
        for (double v : rho) {
            if (v < -1e-12) {
                throw StructuralError("MeasureSummary: local density has negative entries");
            }
        }
        m.local_density_.assign(rho.begin(), rho.end());
    }
    return m;
}

double MeasureSummary::mean() const {
    if (!has_mean_) throw ConfigError("MeasureSummary: mean feature not built for this model");
    return mean_;
}

const SpatialGrid& MeasureSummary::grid() const {
    if (!grid_) throw ConfigError("MeasureSummary: no grid attached");
    return *grid_;
}

double MeasureSummary::density_at(double x) const {
    if (local_density_.empty()) throw ConfigError("MeasureSummary: local density feature not built");
    return interp(local_density_, grid(), x);
}

double MeasureSummary::density_slope_at(double x) const {
    if (local_density_.empty()) throw ConfigError("MeasureSummary: local density feature not built");
    return interp_slope(local_density_, grid(), x);
}

double MeasureSummary::convolved_at(double x) const {
    if (convolved_.empty()) throw ConfigError("MeasureSummary: convolved feature not built");
    return interp(convolved_, grid(), x);
}

double MeasureSummary::convolved_slope_at(double x) const {
    if (convolved_.empty()) throw ConfigError("MeasureSummary: convolved feature not built");
    return interp_slope(convolved_, grid(), x);
}

void MeasureSummary::set_convolved(std::vector<double> values) { convolved_ = std::move(values); }

std::pair<double, double> HamiltonianModel::lagrangian_max(double x, double q,
                                                           const MeasureSummary& mu,
                                                           double /*R*/) const {
    const double gamma = quadratic_p_coefficient();
    if (!(gamma > 0.0)) {
        throw UnsupportedError("lagrangian_max: model '" + name() +
                               "' is not quadratic (uniformly convex) in p");
    }
    const double p_star = q / (2.0 * gamma);
    return {p_star * q - value(x, p_star, mu), p_star};
}

namespace {

class QuadraticMeanFieldModel final : public HamiltonianModel {
public:
    std::string name() const override { return "quadratic_mean_field"; }
    MeasureNeeds needs() const override { return {.mean = true}; }

    double value(double x, double p, const MeasureSummary& mu) const override {
        const double r = x - mu.mean();
        return 0.5 * p * p - 0.5 * r * r;
    }
    double grad_p(double /*x*/, double p, const MeasureSummary& /*mu*/) const override { return p; }
    double grad_x(double x, double /*p*/, const MeasureSummary& mu) const override {
        return -(x - mu.mean());
    }
    double convexity_constant() const override { return 1.0; }
    double quadratic_p_coefficient() const override { return 0.5; }
};

class LocalSeparableModel final : public HamiltonianModel {
public:
    explicit LocalSeparableModel(double scale) : scale_(scale) {}

    std::string name() const override { return "local_separable_62"; }
    MeasureNeeds needs() const override { return {.local_density = true}; }

    double value(double x, double p, const MeasureSummary& mu) const override {
        const double m = mu.density_at(x);
        const double s = x - M_PI / 8.0;
        return scale_ * (p * p - m * m - std::cos(4.0 * M_PI * x) - 0.1 * std::cos(2.0 * M_PI * x) -
                         0.1 * std::sin(2.0 * M_PI * s * s));
    }
    double grad_p(double /*x*/, double p, const MeasureSummary& /*mu*/) const override {
        return 2.0 * scale_ * p;
    }
    double grad_x(double x, double /*p*/, const MeasureSummary& mu) const override {
        const double m = mu.density_at(x);
        const double mp = mu.density_slope_at(x);
        const double s = x - M_PI / 8.0;
        return scale_ * (-2.0 * m * mp + 4.0 * M_PI * std::sin(4.0 * M_PI * x) +
                         0.2 * M_PI * std::sin(2.0 * M_PI * x) -
                         0.4 * M_PI * s * std::cos(2.0 * M_PI * s * s));
    }
    double convexity_constant() const override { return 2.0 * scale_; }
    double quadratic_p_coefficient() const override { return scale_; }

private:
    double scale_;
};

class CongestionModel final : public HamiltonianModel {
public:
    explicit CongestionModel(const CongestionParams& params) : prm_(params) {}

    std::string name() const override { return "congestion"; }
    MeasureNeeds needs() const override { return {.convolved = true}; }

    double value(double x, double p, const MeasureSummary& mu) const override {
        return prm_.gamma_scale * p * p + bump(p) / denom(mu, x) + std::cos(2.0 * M_PI * x);
    }
    double grad_p(double x, double p, const MeasureSummary& mu) const override {
        return 2.0 * prm_.gamma_scale * p + bump_prime(p) / denom(mu, x);
    }
    double grad_x(double x, double p, const MeasureSummary& mu) const override {
        const double r = mu.convolved_at(x);
        const double rp = mu.convolved_slope_at(x);
        const double den = std::abs(prm_.eta + std::abs(r));
        const double dden = (r >= 0.0 ? rp : -rp);  // d/dx of |conv|, conv >= 0 for densities
        return -bump(p) * dden / (den * den) - 2.0 * M_PI * std::sin(2.0 * M_PI * x);
    }
    // gamma''(0) = -2 against the 1/eta amplification: not uniformly convex with
    // the default parameters, so no convexity floor is claimed.
    double convexity_constant() const override {
        return 2.0 * prm_.gamma_scale - 2.0 / prm_.eta;
    }
    double conv_halfwidth() const override { return prm_.conv_halfwidth; }
    double conv_kernel(double y) const override {
        const double w = prm_.conv_halfwidth;
        const double a = std::abs(y);
        return a >= w ? 0.0 : (1.0 - a / w) / w;
    }

private:
    static double bump(double p) { return 1.0 / (1.0 + p * p); }
    static double bump_prime(double p) {
        const double d = 1.0 + p * p;
        return -2.0 * p / (d * d);
    }
    double denom(const MeasureSummary& mu, double x) const {
        return std::abs(prm_.eta + std::abs(mu.convolved_at(x)));
    }

    CongestionParams prm_;
};

}  // namespace

std::unique_ptr<HamiltonianModel> make_quadratic_mean_field() {
    return std::make_unique<QuadraticMeanFieldModel>();
}

std::unique_ptr<HamiltonianModel> make_local_separable(double scale) {
    return std::make_unique<LocalSeparableModel>(scale);
}

std::unique_ptr<HamiltonianModel> make_congestion(const CongestionParams& params) {
    return std::make_unique<CongestionModel>(params);
}

std::unique_ptr<HamiltonianModel> make_model_by_name(const std::string& name) {
    if (name == "quadratic_mean_field") return make_quadratic_mean_field();
    if (name == "local_separable_62") return make_local_separable();
    if (name == "congestion") return make_congestion();
    throw ConfigError("unknown Hamiltonian model '" + name + "'");
}

MeasureSummary build_measure(const HamiltonianModel& model, std::span<const double> rho,
                             const SpatialGrid& grid) {
    const MeasureNeeds needs = model.needs();
    MeasureSummary m = MeasureSummary::from_slice(rho, grid, needs);
    if (needs.convolved) {
        const double w = model.conv_halfwidth();
        const int reach = static_cast<int>(std::ceil(w / grid.dx)) + 1;
        std::vector<double> conv(grid.n, 0.0);
        for (int j = 0; j < grid.n; ++j) {
            double s = 0.0;
            for (int k = -reach; k <= reach; ++k) {
                const int idx = grid.is_torus() ? grid.wrap(j + k) : j + k;
                if (idx < 0 || idx >= grid.n) continue;
                s += model.conv_kernel(k * grid.dx) * rho[idx];
            }
            conv[j] = s * grid.dx;
        }
        m.set_convolved(std::move(conv));
    }
    return m;
}

}  // namespace vvmfg
