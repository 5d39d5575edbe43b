#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "wallchain/cli_io.hpp"
#include "wallchain/effective_sim.hpp"
#include "wallchain/homogenize.hpp"
#include "wallchain/scattering_analysis.hpp"
#include "wallchain/version.hpp"

namespace py = pybind11;
using namespace wallchain;

PYBIND11_MODULE(_wallchain, m) {
    m.attr("__version__") = version_string;

    py::class_<MediumParams>(m, "MediumParams")
        .def(py::init([](double rho0, double a, double S) {
                 MediumParams p{rho0, a, S};
                 p.validate();
                 return p;
             }),
             py::arg("rho0") = 1.0, py::arg("a") = 1.0, py::arg("S") = 1.0)
        .def_readwrite("rho0", &MediumParams::rho0)
        .def_readwrite("a", &MediumParams::a)
        .def_readwrite("S", &MediumParams::S)
        .def("impedance", &MediumParams::impedance);

    py::class_<OscillatorChain>(m, "OscillatorChain")
        .def(py::init([](std::vector<double> s, std::vector<double> M, std::vector<double> K,
                         double L, double center) {
                 OscillatorChain c{std::move(s), std::move(M), std::move(K), L, center};
                 c.validate();
                 return c;
             }),
             py::arg("s"), py::arg("M"), py::arg("K"), py::arg("L") = 1.0, py::arg("center") = 0.0)
        .def_readonly("s", &OscillatorChain::s)
        .def_readonly("M", &OscillatorChain::M)
        .def_readonly("K", &OscillatorChain::K)
        .def_readonly("L", &OscillatorChain::L)
        .def_readonly("center", &OscillatorChain::center)
        .def("__len__", &OscillatorChain::size);

    py::class_<DensityProfile>(m, "DensityProfile")
        .def_static("constant", &DensityProfile::constant, py::arg("L"), py::arg("rho_M"),
                    py::arg("rho_K"), py::arg("center") = 0.0);

    m.def(
        "discretize",
        [](const DensityProfile& profile, std::size_t n, const MediumParams& medium,
           const std::string& rule) {
            PlacementRule r;
            if (rule == "midpoint") r = PlacementRule::midpoint;
            else if (rule == "quantile") r = PlacementRule::quantile;
            else throw py::value_error("rule must be 'midpoint' or 'quantile'");
            return discretize_densities(profile, n, medium, r);
        },
        py::arg("profile"), py::arg("n"), py::arg("medium") = MediumParams{},
        py::arg("rule") = "midpoint");

    m.def("cutoff_frequency", &cutoff_frequency, py::arg("profile"),
          py::arg("medium") = MediumParams{});
    m.def("single_wall_transmission", &single_wall_transmission, py::arg("omega"), py::arg("M"),
          py::arg("K"), py::arg("medium") = MediumParams{});
    m.def(
        "chain_transfer",
        [](double omega, const OscillatorChain& chain, const MediumParams& medium) {
            auto r = chain_transfer(omega, chain, medium);
            return py::make_tuple(r.R, r.T);
        },
        py::arg("omega"), py::arg("chain"), py::arg("medium") = MediumParams{},
        "Returns (R, T) plane-wave amplitudes.");
    m.def(
        "bandgap_scan",
        [](const DensityProfile& profile, std::vector<double> omegas, const MediumParams& medium) {
            auto scan = bandgap_scan(profile, std::move(omegas), medium);
            py::list rows;
            for (const auto& r : scan.rows) rows.append(py::make_tuple(r.omega, r.T2, r.R2));
            py::dict d;
            d["omega_c"] = scan.omega_c;
            d["rows"] = rows;
            d["monotone_below_cutoff"] = scan.monotone_below_cutoff;
            return d;
        },
        py::arg("profile"), py::arg("omegas"), py::arg("medium") = MediumParams{});

    m.def("format_double", &format_double);
    m.def(
        "run_config",
        [](const std::string& text, const std::filesystem::path& out, unsigned jobs,
           bool permissive) {
            ParseOptions opts;
            opts.permissive = permissive;
            std::vector<std::string> warnings;
            RunConfig config = parse_config(text, opts, &warnings);
            std::ostringstream log;
            RunSummary summary;
            {
                py::gil_scoped_release release;
                summary = run(config, out, jobs, log);
            }
            for (auto& w : warnings) summary.warnings.push_back(w);
            return py::make_tuple(summary.files, summary.warnings);
        },
        py::arg("config_json"), py::arg("out"), py::arg("jobs") = 1, py::arg("permissive") = false,
        "Parses a JSON config and runs it into `out`. Returns (files, warnings).");
    m.def(
        "canonical_config",
        [](const std::string& text, bool permissive) {
            ParseOptions opts;
            opts.permissive = permissive;
            return serialize_config(parse_config(text, opts));
        },
        py::arg("config_json"), py::arg("permissive") = false);
}
