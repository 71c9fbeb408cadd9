#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <span>

#include "starkmbl/collapse.hpp"
#include "starkmbl/ensemble.hpp"
#include "starkmbl/errors.hpp"

namespace py = pybind11;
using namespace starkmbl;

namespace {

RmtEnsemble parse_ensemble(const std::string& name) {
    if (name == "poisson") return RmtEnsemble::kPoisson;
    if (name == "goe") return RmtEnsemble::kGoe;
    throw ParameterError("ensemble must be 'poisson' or 'goe', got '" + name + "'");
}

LatticeParams make_params(int sites, int particles, double tunneling, double interaction,
                          double field, double disorder) {
    LatticeParams p;
    p.sites = sites;
    p.particles = particles >= 0 ? particles : sites / 2;
    p.tunneling = tunneling;
    p.interaction = interaction;
    p.field = field;
    p.disorder = disorder;
    return p;
}

py::dict record_to_dict(const EnsembleRecord& r) {
    py::dict d;
    d["L"] = r.sites;
    d["eps"] = r.eps;
    d["F"] = r.field;
    d["mean_r"] = r.mean_r;
    d["stderr_r"] = r.stderr_r;
    d["mean_S"] = r.mean_entropy;
    d["var_S"] = r.var_entropy;
    d["n_realizations"] = r.n_realizations;
    d["n_eigenpairs"] = r.n_eigenpairs;
    d["dropped_ratios"] = r.dropped_ratios;
    d["master_seed"] = r.master_seed;
    return d;
}

py::dict collapse_result_to_dict(const CollapseResult& res) {
    py::dict d;
    d["F_c"] = res.critical_field;
    d["F_c_err"] = res.critical_field_err;
    d["nu"] = res.nu;
    d["nu_err"] = res.nu_err;
    d["min_cost"] = res.min_cost;
    d["boundary"] = res.boundary;
    d["unidentifiable"] = res.unidentifiable;
    py::list per_w;
    for (const WindowFit& f : res.per_window) {
        py::dict e;
        e["w"] = f.w;
        e["F_c"] = f.critical_field;
        e["nu"] = f.nu;
        e["cost"] = f.cost;
        e["boundary"] = f.boundary;
        per_w.append(e);
    }
    d["per_window"] = per_w;
    return d;
}

CollapseInput collapse_input_from_dict(const py::dict& curves, double eps) {
    CollapseInput input;
    input.eps = eps;
    for (auto item : curves) {
        const int sites = item.first.cast<int>();
        auto& curve = input.curves[sites];
        for (auto point : item.second.cast<py::list>()) {
            auto tup = point.cast<py::tuple>();
            CurvePoint cp;
            cp.field = tup[0].cast<double>();
            cp.value = tup[1].cast<double>();
            if (tup.size() > 2) cp.stderr_ = tup[2].cast<double>();
            curve.push_back(cp);
        }
    }
    return input;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exact-diagonalization toolkit for the ergodic to Stark-MBL transition: "
              "tilted disordered fermion chains, spectral statistics, entanglement "
              "entropy and finite-size-scaling collapse";

    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<ResourceError>(m, "ResourceError", PyExc_RuntimeError);
    py::register_exception<NotFoundError>(m, "NotFoundError", PyExc_KeyError);

    py::class_<FockBasis>(m, "FockBasis")
        .def_readonly("L", &FockBasis::sites)
        .def_readonly("N", &FockBasis::particles)
        .def_property_readonly("dim", &FockBasis::dim)
        .def_property_readonly("states",
                               [](const FockBasis& b) { return b.states; })
        .def("state_index",
             [](const FockBasis& b, std::uint32_t mask) { return state_index(b, mask); })
        .def("__len__", &FockBasis::dim)
        .def("__repr__", [](const FockBasis& b) {
            return "FockBasis(L=" + std::to_string(b.sites) + ", N=" +
                   std::to_string(b.particles) + ", dim=" + std::to_string(b.dim()) + ")";
        });

    m.def("enumerate_basis", &enumerate_basis, py::arg("L"), py::arg("N"));
    m.def("binomial", &binomial, py::arg("n"), py::arg("k"));

    m.def(
        "sample_disorder",
        [](double W, int L, std::uint64_t seed) {
            return sample_disorder(W, L, seed).onsite;
        },
        py::arg("W"), py::arg("L"), py::arg("seed"));

    m.def(
        "build_hamiltonian",
        [](const FockBasis& basis, double J, double U, double F, double W, std::uint64_t seed) {
            const LatticeParams p = make_params(basis.sites, basis.particles, J, U, F, W);
            const DisorderRealization d = sample_disorder(W, basis.sites, seed);
            return to_dense(build_hamiltonian(p, d, basis));
        },
        py::arg("basis"), py::arg("J") = 1.0, py::arg("U") = 1.0, py::arg("F") = 0.0,
        py::arg("W") = 0.0, py::arg("seed") = 1,
        "Dense Hamiltonian matrix for one disorder realization");

    m.def(
        "full_spectrum",
        [](const Eigen::MatrixXd& dense, bool want_vectors) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
                dense, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
            return py::make_tuple(solver.eigenvalues(),
                                  want_vectors ? py::cast(solver.eigenvectors())
                                               : py::none().cast<py::object>());
        },
        py::arg("matrix"), py::arg("want_vectors") = false);

    py::class_<SpectrumWindow>(m, "SpectrumWindow")
        .def_readonly("eps", &SpectrumWindow::eps)
        .def_readonly("values", &SpectrumWindow::values)
        .def_readonly("vectors", &SpectrumWindow::vectors)
        .def_readonly("E_min", &SpectrumWindow::e_min)
        .def_readonly("E_max", &SpectrumWindow::e_max);

    m.def(
        "eigen_window",
        [](const FockBasis& basis, double eps, int k, double J, double U, double F, double W,
           std::uint64_t seed, std::size_t dense_cutoff) {
            const LatticeParams p = make_params(basis.sites, basis.particles, J, U, F, W);
            const DisorderRealization d = sample_disorder(W, basis.sites, seed);
            const SparseHamiltonian h = build_hamiltonian(p, d, basis);
            if (h.dim <= dense_cutoff) return target_window(full_spectrum(h, true), eps, k);
            return shift_invert_window(h, eps, k);
        },
        py::arg("basis"), py::arg("eps"), py::arg("k") = kDefaultWindow, py::arg("J") = 1.0,
        py::arg("U") = 1.0, py::arg("F") = 0.0, py::arg("W") = 0.0, py::arg("seed") = 1,
        py::arg("dense_cutoff") = 2000,
        "k eigenpairs nearest the energy-density target for one realization");

    m.def(
        "gap_ratios",
        [](const Eigen::VectorXd& energies) {
            const GapRatioSample s = gap_ratios(energies);
            return py::make_tuple(s.ratios, s.dropped);
        },
        py::arg("energies"), "Adjacent-gap ratios (ratios, dropped_count)");

    m.def(
        "reference_r_pdf",
        [](const std::string& ensemble, double r) { return reference_r_pdf(parse_ensemble(ensemble), r); },
        py::arg("ensemble"), py::arg("r"));
    m.def(
        "reference_r_mean",
        [](const std::string& ensemble) { return reference_r_mean(parse_ensemble(ensemble)); },
        py::arg("ensemble"));

    m.def(
        "half_chain_entropy",
        [](const Eigen::VectorXd& state, const FockBasis& basis) {
            return half_chain_entropy(state, basis);
        },
        py::arg("state"), py::arg("basis"));

    m.def(
        "entropy_stats",
        [](const std::vector<double>& samples) {
            const auto [mean, var] = entropy_stats(samples);
            return py::make_tuple(mean, var);
        },
        py::arg("samples"));

    m.def(
        "run_point",
        [](int L, double eps, int n_samples, std::uint64_t master_seed, int k, double F, double W,
           double J, double U, std::size_t dense_cutoff) {
            LatticeParams p = make_params(L, -1, J, U, F, W);
            SolverPolicy policy;
            policy.dense_cutoff = dense_cutoff;
            return record_to_dict(run_point(p, eps, n_samples, master_seed, k, policy).record);
        },
        py::arg("L"), py::arg("eps"), py::arg("n_samples"), py::arg("master_seed") = 1,
        py::arg("k") = kDefaultWindow, py::arg("F") = 0.0, py::arg("W") = 0.5, py::arg("J") = 1.0,
        py::arg("U") = 1.0, py::arg("dense_cutoff") = 2000,
        "Disorder-averaged observables at one (L, eps, F) point");

    m.def(
        "rescale",
        [](const std::vector<double>& fields, double F_c, double nu, int L) {
            return rescale(fields, F_c, nu, L);
        },
        py::arg("fields"), py::arg("F_c"), py::arg("nu"), py::arg("L"));

    m.def(
        "collapse_cost",
        [](const py::dict& curves, double F_c, double nu, double w) {
            return collapse_cost(collapse_input_from_dict(curves, 0.0), F_c, nu, w);
        },
        py::arg("curves"), py::arg("F_c"), py::arg("nu"), py::arg("w") = 1.0,
        "curves: {L: [(F, y[, err]), ...]}");

    m.def(
        "fit_collapse",
        [](const py::dict& curves, double eps, const std::vector<double>& w_grid) {
            const CollapseInput input = collapse_input_from_dict(curves, eps);
            return collapse_result_to_dict(
                fit_collapse(input, std::span<const double>(w_grid.data(), w_grid.size())));
        },
        py::arg("curves"), py::arg("eps") = 0.5, py::arg("w_grid") = std::vector<double>{},
        "Fit (F_c, nu) so the curves collapse onto one universal function");

    m.def("read_records_csv", [](const std::string& path) {
        py::list out;
        for (const EnsembleRecord& r : read_records_csv(path)) out.append(record_to_dict(r));
        return out;
    });

    m.attr("__version__") = "0.1.0";
}
