#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vvmfg/closed_form.hpp"
#include "vvmfg/config.hpp"
#include "vvmfg/coupling.hpp"
#include "vvmfg/fokker_planck.hpp"
#include "vvmfg/hjb.hpp"
#include "vvmfg/metrics.hpp"
#include "vvmfg/particles.hpp"
#include "vvmfg/runner.hpp"

namespace py = pybind11;
using namespace vvmfg;

namespace {

py::array_t<double> field_to_array(const SpaceTimeField& f) {
    py::array_t<double> out({f.levels(), f.n()});
    auto r = out.mutable_unchecked<2>();
    for (int l = 0; l < f.levels(); ++l) {
        for (int j = 0; j < f.n(); ++j) r(l, j) = f.at(l, j);
    }
    return out;
}

SpaceTimeField array_to_field(const py::array_t<double>& a, const SpatialGrid& grid,
                              const TimeGrid& tgrid) {
    if (a.ndim() != 2 || a.shape(0) != tgrid.nt + 1 || a.shape(1) != grid.n) {
        throw StructuralError("expected an array of shape (nt+1, n)");
    }
    SpaceTimeField f(grid, tgrid);
    auto r = a.unchecked<2>();
    for (int l = 0; l < f.levels(); ++l) {
        for (int j = 0; j < f.n(); ++j) f.at(l, j) = r(l, j);
    }
    return f;
}

std::vector<double> to_vec(const py::array_t<double>& a) {
    if (a.ndim() != 1) throw StructuralError("expected a 1-D array");
    auto r = a.unchecked<1>();
    std::vector<double> v(a.shape(0));
    for (py::ssize_t i = 0; i < a.shape(0); ++i) v[i] = r(i);
    return v;
}

}  // namespace

PYBIND11_MODULE(vvmfg, m) {
    m.doc() = "Coupled HJB/Fokker-Planck mean field game solver with vanishing-viscosity "
              "rate checks";

    py::register_exception<StructuralError>(m, "StructuralError");
    py::register_exception<ConfigError>(m, "ConfigurationError");
    py::register_exception<DivergenceError>(m, "DivergenceError");
    py::register_exception<UnsupportedError>(m, "UnsupportedError");

    py::class_<SpatialGrid>(m, "SpatialGrid")
        .def_static("torus", &SpatialGrid::torus, py::arg("x_min"), py::arg("x_max"), py::arg("n"))
        .def_static("truncated", &SpatialGrid::truncated, py::arg("x_min"), py::arg("x_max"),
                    py::arg("n"))
        .def_readonly("x_min", &SpatialGrid::x_min)
        .def_readonly("x_max", &SpatialGrid::x_max)
        .def_readonly("n", &SpatialGrid::n)
        .def_readonly("dx", &SpatialGrid::dx)
        .def("center", &SpatialGrid::center)
        .def("is_torus", &SpatialGrid::is_torus)
        .def("centers", [](const SpatialGrid& g) {
            py::array_t<double> out(py::array::ShapeContainer{g.n});
            auto r = out.mutable_unchecked<1>();
            for (int j = 0; j < g.n; ++j) r(j) = g.center(j);
            return out;
        });

    py::class_<TimeGrid>(m, "TimeGrid")
        .def_static("make", &TimeGrid::make, py::arg("T"), py::arg("nt"))
        .def_readonly("T", &TimeGrid::T)
        .def_readonly("nt", &TimeGrid::nt)
        .def_readonly("dt", &TimeGrid::dt);

    py::class_<HamiltonianModel, std::shared_ptr<HamiltonianModel>>(m, "HamiltonianModel")
        .def("name", &HamiltonianModel::name)
        .def("value", &HamiltonianModel::value)
        .def("grad_p", &HamiltonianModel::grad_p)
        .def("grad_x", &HamiltonianModel::grad_x)
        .def("lagrangian_max", &HamiltonianModel::lagrangian_max, py::arg("x"), py::arg("q"),
             py::arg("mu"), py::arg("R") = 5.0);

    m.def("make_model", [](const std::string& name) {
        return std::shared_ptr<HamiltonianModel>(make_model_by_name(name));
    });

    py::class_<MeasureSummary>(m, "MeasureSummary")
        .def_static("mean_only", &MeasureSummary::mean_only)
        .def_static("from_slice",
                    [](const py::array_t<double>& rho, const SpatialGrid& grid,
                       const HamiltonianModel& model) {
                        return build_measure(model, to_vec(rho), grid);
                    })
        .def("mean", &MeasureSummary::mean)
        .def("density_at", &MeasureSummary::density_at);

    m.def("gradient", [](const py::array_t<double>& f, const SpatialGrid& g) {
        return gradient(to_vec(f), g);
    });
    m.def("laplacian", [](const py::array_t<double>& f, const SpatialGrid& g) {
        return laplacian(to_vec(f), g);
    });
    m.def("integrate", [](const py::array_t<double>& f, const SpatialGrid& g) {
        return integrate(to_vec(f), g);
    });

    m.def("make_initial_density",
          [](const std::string& kind, double a, double b, const SpatialGrid& grid) {
              InitialDensitySpec spec;
              if (kind == "gaussian") {
                  spec = GaussianInit{a, b};
              } else if (kind == "point_mass") {
                  spec = PointMassInit{a};
              } else {
                  throw ConfigError("kind must be 'gaussian' or 'point_mass'");
              }
              return make_initial_density(spec, grid);
          },
          py::arg("kind"), py::arg("mean_or_at"), py::arg("variance") = 0.0, py::arg("grid"));

    py::class_<MFGSolution>(m, "MFGSolution")
        .def_property_readonly("u", [](const MFGSolution& s) { return field_to_array(s.u); })
        .def_property_readonly("rho", [](const MFGSolution& s) { return field_to_array(s.rho); })
        .def_property_readonly("policy",
                               [](const MFGSolution& s) { return field_to_array(s.policy); })
        .def_readonly("beta", &MFGSolution::beta)
        .def_readonly("iterations", &MFGSolution::iterations)
        .def("converged", &MFGSolution::converged)
        .def("fixed_point_gaps", [](const MFGSolution& s) {
            std::vector<double> g;
            for (const auto& r : s.history) g.push_back(r.fixed_point_gap);
            return g;
        })
        .def("policy_changes", [](const MFGSolution& s) {
            std::vector<double> g;
            for (const auto& r : s.history) g.push_back(r.policy_change);
            return g;
        });

    m.def("solve_hjb",
          [](const HamiltonianModel& model, const py::array_t<double>& rho,
             const py::array_t<double>& g, double beta, const SpatialGrid& grid,
             const TimeGrid& tgrid) {
              DensityTrajectory traj(array_to_field(rho, grid, tgrid));
              return field_to_array(solve_hjb(model, traj, to_vec(g), beta));
          },
          py::arg("model"), py::arg("rho"), py::arg("g"), py::arg("beta"), py::arg("grid"),
          py::arg("tgrid"));

    m.def("solve_fp",
          [](const HamiltonianModel& model, const py::array_t<double>& u,
             const py::array_t<double>& m0, double beta, const SpatialGrid& grid,
             const TimeGrid& tgrid) {
              return field_to_array(
                  solve_fp(model, array_to_field(u, grid, tgrid), to_vec(m0), beta));
          },
          py::arg("model"), py::arg("u"), py::arg("m0"), py::arg("beta"), py::arg("grid"),
          py::arg("tgrid"));

    m.def("solve_mfg_fictitious_play",
          [](const HamiltonianModel& model, const py::array_t<double>& g,
             const py::array_t<double>& m0, const SpatialGrid& grid, const TimeGrid& tgrid,
             double beta, double tol, int max_iter) {
              return solve_mfg_fictitious_play(model, to_vec(g), to_vec(m0), grid, tgrid, beta, tol,
                                               max_iter);
          },
          py::arg("model"), py::arg("g"), py::arg("m0"), py::arg("grid"), py::arg("tgrid"),
          py::arg("beta"), py::arg("tol") = 1e-6, py::arg("max_iter") = 200);

    m.def("solve_mfg_policy_iteration",
          [](const HamiltonianModel& model, const py::array_t<double>& g,
             const py::array_t<double>& m0, const SpatialGrid& grid, const TimeGrid& tgrid,
             double beta, double R, double tol, int max_iter) {
              return solve_mfg_policy_iteration(model, to_vec(g), to_vec(m0), grid, tgrid, beta, R,
                                                std::nullopt, tol, max_iter);
          },
          py::arg("model"), py::arg("g"), py::arg("m0"), py::arg("grid"), py::arg("tgrid"),
          py::arg("beta"), py::arg("R") = 5.0, py::arg("tol") = 1e-6, py::arg("max_iter") = 60);

    m.def("w1_grid", [](const py::array_t<double>& a, const py::array_t<double>& b,
                        const SpatialGrid& g) { return w1_grid(to_vec(a), to_vec(b), g); });

    m.def("loglog_slope", [](const std::vector<std::pair<double, double>>& pts) {
        const RateFit fit = loglog_slope(pts);
        return py::make_tuple(fit.slope, fit.intercept, fit.r_squared);
    });

    m.def("u_exact", py::overload_cast<double, double, double, double, double, int>(
                         &closed_form::u_exact),
          py::arg("t"), py::arg("x"), py::arg("beta"), py::arg("m"), py::arg("T"),
          py::arg("d") = 1);
    m.def("rho_exact_params", [](double t, double beta, double m, double sigma2, double T) {
        const auto p = closed_form::rho_exact_params(t, beta, m, sigma2, T);
        return py::make_tuple(p.mean, p.variance);
    });
    m.def("viscosity_gap_exact", &closed_form::viscosity_gap_exact);
    m.def("w1_gap_exact", &closed_form::w1_gap_exact);

    m.def("simulate_nplayer",
          [](const HamiltonianModel& model, const MFGSolution& sol, int N, double dt,
             std::uint64_t seed, bool frozen_flow) {
              NPlayerOptions opts;
              opts.feedback = frozen_flow ? MeasureFeedback::FrozenFlow : MeasureFeedback::Empirical;
              const NPlayerResult res = simulate_nplayer(model, sol, N, dt, seed, opts);
              py::list snaps;
              for (const auto& e : res.snapshots) {
                  py::array_t<double> arr(
                      py::array::ShapeContainer{static_cast<py::ssize_t>(e.positions.size())});
                  auto r = arr.mutable_unchecked<1>();
                  for (std::size_t i = 0; i < e.positions.size(); ++i) {
                      r(static_cast<py::ssize_t>(i)) = e.positions[i];
                  }
                  snaps.append(arr);
              }
              return py::make_tuple(res.snapshot_times, snaps, res.clamp_count);
          },
          py::arg("model"), py::arg("solution"), py::arg("N"), py::arg("dt"), py::arg("seed"),
          py::arg("frozen_flow") = false);

    m.def("empirical_w1_gaussian", [](const py::array_t<double>& atoms, double mean,
                                      double variance) {
        return empirical_w1(to_vec(atoms), closed_form::GaussianParams{mean, variance});
    });

    m.def("run_config", [](const std::string& json_text, const std::string& subcommand) {
        const ExperimentConfig cfg = parse_config(json_text);
        py::dict out;
        if (subcommand == "sweep-beta") {
            const SweepReport rep = run_sweep_beta(cfg);
            out["sweep_csv"] = rep.sweep_csv;
            out["rates_csv"] = rep.rates_csv;
            if (rep.have_fits) {
                out["slope_all"] = rep.fit_all.slope;
                out["slope_first_half"] = rep.fit_half.slope;
                out["r_squared_all"] = rep.fit_all.r_squared;
            }
            out["failed"] = rep.failed_count;
        } else if (subcommand == "oracle-check") {
            const OracleReport rep = run_oracle_check(cfg, false);
            out["sup_u_err"] = rep.sup_u_err;
            out["w1_sup_t"] = rep.w1_sup_t;
            out["grad_sup_err"] = rep.grad_sup_err;
            out["converged"] = rep.converged;
        } else {
            throw ConfigError("run_config: subcommand must be 'sweep-beta' or 'oracle-check'");
        }
        return out;
    });
}
