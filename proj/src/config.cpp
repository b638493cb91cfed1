#include "vvmfg/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace vvmfg {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
        }
    }
}

double get_num(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("config: missing '" + key + "' in " + where);
    if (!obj[key].is_number()) throw ConfigError("config: '" + key + "' in " + where + " must be a number");
    return obj[key].get<double>();
}

double get_num_or(const json& obj, const std::string& key, double fallback) {
    return obj.contains(key) ? obj[key].get<double>() : fallback;
}

std::string get_str(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("config: missing '" + key + "' in " + where);
    if (!obj[key].is_string()) throw ConfigError("config: '" + key + "' in " + where + " must be a string");
    return obj[key].get<std::string>();
}

}  // namespace

std::vector<double> TerminalCostSpec::build(const SpatialGrid& grid) const {
    std::vector<double> g(grid.n, 0.0);
    if (name == "zero") return g;
    if (name == "quadratic") {
        for (int j = 0; j < grid.n; ++j) {
            const double d = grid.center(j) - center;
            g[j] = scale * d * d;
        }
        return g;
    }
    throw ConfigError("config: unknown terminal cost '" + name + "'");
}

SpatialGrid ExperimentConfig::make_grid() const {
    return domain_kind == SpatialGrid::Kind::Torus ? SpatialGrid::torus(x_min, x_max, n)
                                                   : SpatialGrid::truncated(x_min, x_max, n);
}

TimeGrid ExperimentConfig::make_tgrid() const { return TimeGrid::make(T, nt); }

std::unique_ptr<HamiltonianModel> ExperimentConfig::make_model() const {
    if (model_name == "quadratic_mean_field") return make_quadratic_mean_field();
    if (model_name == "local_separable_62") return make_local_separable(model_scale);
    if (model_name == "congestion") return make_congestion(congestion);
    throw ConfigError("config: unknown model '" + model_name + "'");
}

std::vector<double> ExperimentConfig::make_g(const SpatialGrid& grid) const { return g.build(grid); }

std::vector<double> ExperimentConfig::make_m0(const SpatialGrid& grid) const {
    return make_initial_density(m0, grid);
}

Restriction ExperimentConfig::effective_restriction() const {
    if (restriction) return *restriction;
    return {x_min, x_max};
}

double ExperimentConfig::m0_mean() const {
    if (const auto* g0 = std::get_if<GaussianInit>(&m0)) return g0->mean;
    if (const auto* p0 = std::get_if<PointMassInit>(&m0)) return p0->at;
    throw ConfigError("config: m0 mean is only defined for gaussian/point_mass specs");
}

double ExperimentConfig::m0_variance() const {
    if (const auto* g0 = std::get_if<GaussianInit>(&m0)) return g0->variance;
    throw ConfigError("config: m0 variance is only defined for gaussian specs");
}

std::string hash_of_json_text(const std::string& json_text) {
    const std::string canonical = json::parse(json_text).dump();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");

    reject_unknown_keys(root,
                        {"domain", "time", "model", "g", "m0", "betas", "solver", "restriction",
                         "particles", "output", "workers", "seed", "mode"},
                        "top level");

    ExperimentConfig cfg;
    cfg.hash = hash_of_json_text(json_text);

    {
        if (!root.contains("domain")) throw ConfigError("config: missing 'domain'");
        const json& d = root["domain"];
        reject_unknown_keys(d, {"kind", "x_min", "x_max", "n"}, "domain");
        const std::string kind = get_str(d, "kind", "domain");
        if (kind == "torus") {
            cfg.domain_kind = SpatialGrid::Kind::Torus;
        } else if (kind == "truncated") {
            cfg.domain_kind = SpatialGrid::Kind::Truncated;
        } else {
            throw ConfigError("config: domain.kind must be 'torus' or 'truncated'");
        }
        cfg.x_min = get_num(d, "x_min", "domain");
        cfg.x_max = get_num(d, "x_max", "domain");
        cfg.n = static_cast<int>(get_num(d, "n", "domain"));
    }
    {
        if (!root.contains("time")) throw ConfigError("config: missing 'time'");
        const json& t = root["time"];
        reject_unknown_keys(t, {"T", "nt"}, "time");
        cfg.T = get_num(t, "T", "time");
        cfg.nt = static_cast<int>(get_num(t, "nt", "time"));
    }
    {
        if (!root.contains("model")) throw ConfigError("config: missing 'model'");
        const json& m = root["model"];
        reject_unknown_keys(m, {"name", "params"}, "model");
        cfg.model_name = get_str(m, "name", "model");
        const json params = m.contains("params") ? m["params"] : json::object();
        if (cfg.model_name == "local_separable_62") {
            cfg.model_scale = get_num_or(params, "scale", 0.01);
        } else if (cfg.model_name == "congestion") {
            cfg.congestion.gamma_scale = get_num_or(params, "gamma_scale", 1.0);
            cfg.congestion.eta = get_num_or(params, "eta", 0.1);
            cfg.congestion.conv_halfwidth = get_num_or(params, "conv_halfwidth", 0.1);
        }
    }
    if (root.contains("g")) {
        const json& g = root["g"];
        reject_unknown_keys(g, {"name", "params"}, "g");
        cfg.g.name = get_str(g, "name", "g");
        const json params = g.contains("params") ? g["params"] : json::object();
        cfg.g.center = get_num_or(params, "center", 0.0);
        cfg.g.scale = get_num_or(params, "scale", 1.0);
    }
    {
        if (!root.contains("m0")) throw ConfigError("config: missing 'm0'");
        const json& m = root["m0"];
        reject_unknown_keys(m, {"kind", "params"}, "m0");
        const std::string kind = get_str(m, "kind", "m0");
        const json params = m.contains("params") ? m["params"] : json::object();
        if (kind == "gaussian") {
            cfg.m0 = GaussianInit{get_num(params, "mean", "m0.params"),
                                  get_num(params, "variance", "m0.params")};
        } else if (kind == "point_mass") {
            cfg.m0 = PointMassInit{get_num(params, "at", "m0.params")};
        } else if (kind == "custom") {
            if (!params.contains("values") || !params["values"].is_array()) {
                throw ConfigError("config: m0 custom spec needs a 'values' array");
            }
            CustomInit c;
            for (const auto& v : params["values"]) c.values.push_back(v.get<double>());
            cfg.m0 = std::move(c);
        } else {
            throw ConfigError("config: m0.kind must be gaussian, point_mass, or custom");
        }
    }
    if (root.contains("betas")) {
        if (!root["betas"].is_array()) throw ConfigError("config: 'betas' must be an array");
        cfg.betas.clear();
        for (const auto& b : root["betas"]) cfg.betas.push_back(b.get<double>());
        if (cfg.betas.empty()) throw ConfigError("config: 'betas' must be non-empty");
    }
    if (root.contains("solver")) {
        const json& s = root["solver"];
        reject_unknown_keys(s, {"coupler", "tol", "max_iter", "damping", "R", "reference_dissipation"}, "solver");
        if (s.contains("coupler")) {
            const std::string c = s["coupler"].get<std::string>();
            if (c == "fictitious_play") {
                cfg.coupler = Coupler::FictitiousPlay;
            } else if (c == "policy_iteration") {
                cfg.coupler = Coupler::PolicyIteration;
            } else {
                throw ConfigError("config: solver.coupler must be fictitious_play or policy_iteration");
            }
        }
        if (s.contains("reference_dissipation")) {
            const std::string rd = s["reference_dissipation"].get<std::string>();
            if (rd == "local") {
                cfg.reference_dissipation = Dissipation::LocalLaxFriedrichs;
            } else if (rd == "classical") {
                cfg.reference_dissipation = Dissipation::ClassicalLaxFriedrichs;
            } else {
                throw ConfigError("config: solver.reference_dissipation must be 'local' or 'classical'");
            }
        }
        cfg.tol = get_num_or(s, "tol", cfg.tol);
        cfg.max_iter = static_cast<int>(get_num_or(s, "max_iter", cfg.max_iter));
        cfg.R = get_num_or(s, "R", cfg.R);
        if (s.contains("damping")) {
            if (s["damping"].is_string()) {
                if (s["damping"].get<std::string>() != "harmonic") {
                    throw ConfigError("config: solver.damping must be 'harmonic' or a number");
                }
                cfg.damping = {Damping::Kind::Harmonic, 0.5};
            } else if (s["damping"].is_number()) {
                const double delta = s["damping"].get<double>();
                if (!(delta > 0.0 && delta <= 1.0)) {
                    throw ConfigError("config: fixed damping must lie in (0, 1]");
                }
                cfg.damping = {Damping::Kind::Fixed, delta};
            } else {
                throw ConfigError("config: solver.damping must be 'harmonic' or a number");
            }
        }
    }
    if (root.contains("mode")) {
        const std::string m = root["mode"].get<std::string>();
        if (m == "grid") {
            cfg.mode = SolveMode::Grid;
        } else if (m == "exact_oracle") {
            cfg.mode = SolveMode::ExactOracle;
        } else {
            throw ConfigError("config: mode must be 'grid' or 'exact_oracle'");
        }
    }
    if (root.contains("restriction")) {
        const json& r = root["restriction"];
        reject_unknown_keys(r, {"x_lo", "x_hi"}, "restriction");
        Restriction res{get_num(r, "x_lo", "restriction"), get_num(r, "x_hi", "restriction")};
        if (!(res.x_lo < res.x_hi)) throw ConfigError("config: restriction must have x_lo < x_hi");
        cfg.restriction = res;
    }
    if (root.contains("particles")) {
        const json& p = root["particles"];
        reject_unknown_keys(p, {"N_list", "seeds", "dt"}, "particles");
        if (p.contains("N_list")) {
            cfg.particles.N_list.clear();
            for (const auto& v : p["N_list"]) cfg.particles.N_list.push_back(v.get<long>());
        }
        cfg.particles.seeds = static_cast<int>(get_num_or(p, "seeds", cfg.particles.seeds));
        cfg.particles.dt = get_num_or(p, "dt", cfg.particles.dt);
    }
    if (root.contains("output")) {
        const json& o = root["output"];
        reject_unknown_keys(o, {"dir", "emit_svg"}, "output");
        if (o.contains("dir")) cfg.output_dir = o["dir"].get<std::string>();
        if (o.contains("emit_svg")) cfg.emit_svg = o["emit_svg"].get<bool>();
    }
    if (root.contains("workers")) cfg.workers = root["workers"].get<int>();
    if (root.contains("seed")) cfg.seed = root["seed"].get<std::uint64_t>();

    if (cfg.workers < 1) throw ConfigError("config: workers must be >= 1");
    if (cfg.mode == SolveMode::ExactOracle && cfg.model_name != "quadratic_mean_field") {
        throw ConfigError("config: exact_oracle mode needs the quadratic_mean_field model");
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace vvmfg
