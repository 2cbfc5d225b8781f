#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hhdeco/analysis.hpp"
#include "hhdeco/error.hpp"
#include "hhdeco/heom/heom.hpp"
#include "hhdeco/model.hpp"
#include "hhdeco/observables.hpp"
#include "hhdeco/refmodels.hpp"

namespace py = pybind11;
using namespace hhdeco;

#ifndef HHDECO_VERSION
#define HHDECO_VERSION "dev"
#endif

PYBIND11_MODULE(_core, m) {
    m.doc() = "Hubbard-Holstein decoherence core";
    m.attr("__version__") = HHDECO_VERSION;

    auto base = py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<TruncationError>(m, "TruncationError", numerical.ptr());
    py::register_exception<InvariantError>(m, "InvariantError", base.ptr());

    py::class_<model::ModelParams>(m, "ModelParams")
        .def(py::init([](double t0, double U, double eta, double gamma, double beta) {
                 model::ModelParams p{t0, U, eta, gamma, beta};
                 p.validate();
                 return p;
             }),
             py::arg("t0") = 1.0, py::arg("U") = 0.0, py::arg("eta") = 0.0, py::arg("gamma") = 0.3,
             py::arg("beta") = 1.0)
        .def_readwrite("t0", &model::ModelParams::t0)
        .def_readwrite("U", &model::ModelParams::U)
        .def_readwrite("eta", &model::ModelParams::eta)
        .def_readwrite("gamma", &model::ModelParams::gamma)
        .def_readwrite("beta", &model::ModelParams::beta);

    m.def("build_hs", &model::build_hs, py::arg("params"));
    m.def("build_hs0", &model::build_hs0, py::arg("params"), py::arg("mean_occupation") = 0.5);
    m.def("build_vs", &model::build_vs, py::arg("params"));
    m.def("build_coupling_ops", [] {
        const auto q = model::build_coupling_ops();
        return std::vector<CMatrix>(q.begin(), q.end());
    });
    m.def("sector_eigenvalues", [](const CMatrix& hs) { return RVector(model::sector_eigensystem(hs).values); });
    m.def("initial_state", &model::initial_state, py::arg("hs"));

    m.def(
        "expand_bath",
        [](const model::ModelParams& p, int K) {
            const auto b = heom::expand_bath(p, K);
            std::vector<std::complex<double>> amp;
            std::vector<double> rate;
            for (const auto& t : b.terms) {
                amp.push_back(t.amplitude);
                rate.push_back(t.rate);
            }
            return py::make_tuple(amp, rate, b.residual);
        },
        py::arg("params"), py::arg("K"), "(amplitudes, rates, residual)");

    py::enum_<heom::HamiltonianKind>(m, "HamiltonianKind")
        .value("Full", heom::HamiltonianKind::Full)
        .value("HartreeFock", heom::HamiltonianKind::HartreeFock);

    py::class_<heom::HeomConfig>(m, "HeomConfig")
        .def(py::init<>())
        .def_readwrite("K", &heom::HeomConfig::K)
        .def_readwrite("L", &heom::HeomConfig::L)
        .def_readwrite("dt", &heom::HeomConfig::dt)
        .def_readwrite("t_max", &heom::HeomConfig::t_max)
        .def_readwrite("record_stride", &heom::HeomConfig::record_stride)
        .def_readwrite("use_scaling", &heom::HeomConfig::use_scaling)
        .def_readwrite("use_terminator", &heom::HeomConfig::use_terminator)
        .def_readwrite("threads", &heom::HeomConfig::threads);

    py::class_<heom::Trajectory>(m, "Trajectory")
        .def_readonly("times", &heom::Trajectory::times)
        .def_readonly("states", &heom::Trajectory::states)
        .def_property_readonly("within_tolerance",
                               [](const heom::Trajectory& t) { return t.diagnostics.within_tolerance(); })
        .def_property_readonly("n_ados", [](const heom::Trajectory& t) { return t.diagnostics.n_ados; });

    m.def(
        "propagate",
        [](const model::ModelParams& p, const heom::HeomConfig& cfg, heom::HamiltonianKind kind) {
            const auto model = heom::hubbard_holstein(p, cfg.K, kind);
            py::gil_scoped_release release;
            return heom::propagate(model, model::initial_state(model.hamiltonian), cfg);
        },
        py::arg("params"), py::arg("config"), py::arg("kind") = heom::HamiltonianKind::Full,
        "HEOM run from the superposition of the two lowest eigenstates.");

    m.def("purity", &obs::purity, py::arg("rho"));
    m.def("one_body_rdm", &obs::one_body_rdm, py::arg("rho"));
    m.def("cumulant_trace", &obs::cumulant_trace, py::arg("gamma"));
    m.def("gibbs_state", &obs::gibbs_state, py::arg("hs"), py::arg("beta"));
    m.def("eigenbasis_elements", py::overload_cast<const CMatrix&, const CMatrix&>(&obs::eigenbasis_elements),
          py::arg("rho"), py::arg("hs"));

    py::enum_<analysis::AsymptoteMode>(m, "AsymptoteMode")
        .value("Fixed", analysis::AsymptoteMode::Fixed)
        .value("TailAverage", analysis::AsymptoteMode::TailAverage)
        .value("Free", analysis::AsymptoteMode::Free);

    py::class_<analysis::FitConfig>(m, "FitConfig")
        .def(py::init<>())
        .def_readwrite("n_terms", &analysis::FitConfig::n_terms)
        .def_readwrite("asymptote_mode", &analysis::FitConfig::asymptote_mode)
        .def_readwrite("fixed_asymptote", &analysis::FitConfig::fixed_asymptote)
        .def_readwrite("tail_fraction", &analysis::FitConfig::tail_fraction)
        .def_readwrite("select_terms", &analysis::FitConfig::select_terms)
        .def_readwrite("min_rms_gain", &analysis::FitConfig::min_rms_gain)
        .def_readwrite("seed", &analysis::FitConfig::seed);

    py::class_<analysis::ExpFitResult>(m, "ExpFitResult")
        .def_readonly("asymptote", &analysis::ExpFitResult::asymptote)
        .def_property_readonly("amplitudes",
                               [](const analysis::ExpFitResult& r) {
                                   std::vector<double> a;
                                   for (const auto& t : r.terms) a.push_back(t.amplitude);
                                   return a;
                               })
        .def_property_readonly("taus",
                               [](const analysis::ExpFitResult& r) {
                                   std::vector<double> a;
                                   for (const auto& t : r.terms) a.push_back(t.tau);
                                   return a;
                               })
        .def_readonly("residual_rms", &analysis::ExpFitResult::residual_rms)
        .def_readonly("converged", &analysis::ExpFitResult::converged)
        .def_readonly("warnings", &analysis::ExpFitResult::warnings);

    m.def(
        "fit_exponentials",
        [](const std::vector<double>& t, const std::vector<double>& y, const analysis::FitConfig& cfg) {
            return analysis::fit_exponentials(t, y, cfg);
        },
        py::arg("t"), py::arg("y"), py::arg("config") = analysis::FitConfig{});

    m.def(
        "correlation_energy",
        [](const std::vector<double>& weights, const model::ModelParams& p) {
            return ref::correlation_energy(weights, model::build_hs(p), model::build_hs0(p), 200, 6,
                                           model::doublon_operator())
                .e_cor;
        },
        py::arg("weights"), py::arg("params"));
    m.def("schmidt_purity", &ref::schmidt_purity, py::arg("psi"), py::arg("electronic_dim") = 4);
    m.def(
        "analytic_dephasing",
        [](const model::ModelParams& p, const std::vector<double>& t) { return ref::analytic_dephasing(p, t); },
        py::arg("params"), py::arg("times"));
}
