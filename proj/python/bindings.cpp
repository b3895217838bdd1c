#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <tuple>

#include "ksync/case_io.hpp"
#include "ksync/certificate.hpp"
#include "ksync/errors.hpp"
#include "ksync/oracle.hpp"
#include "ksync/series.hpp"
#include "ksync/sweep.hpp"

namespace py = pybind11;
using namespace ksync;

namespace {

// Networks from Python are given as a list of (from, to, weight) tuples.
Network make_network(std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges,
                     const std::string& name) {
    std::vector<Edge> list;
    list.reserve(edges.size());
    for (const auto& [from, to, w] : edges) list.push_back({from, to, w});
    return Network(n, std::move(list), name);
}

py::object json_to_python(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_ksync, m) {
    m.doc() = "Series-based synchronization tests for Kuramoto networks";

    auto error = py::register_exception<Error>(m, "KsyncError", PyExc_RuntimeError);
    (void)error;

    py::class_<Network>(m, "Network")
        .def(py::init(&make_network), py::arg("n"), py::arg("edges"), py::arg("name") = "")
        .def_property_readonly("node_count", &Network::node_count)
        .def_property_readonly("edge_count", &Network::edge_count)
        .def_property_readonly("name", &Network::name)
        .def_property_readonly("edges", [](const Network& net) {
            std::vector<std::tuple<std::size_t, std::size_t, double>> out;
            for (const auto& e : net.edges()) out.emplace_back(e.from, e.to, e.weight);
            return out;
        })
        .def("is_tree", &Network::is_tree)
        .def("__repr__", [](const Network& net) {
            return "<Network n=" + std::to_string(net.node_count()) + " m=" + std::to_string(net.edge_count()) + ">";
        });

    py::class_<OperatorSet>(m, "OperatorSet")
        .def_readonly("network", &OperatorSet::network)
        .def_readonly("incidence", &OperatorSet::incidence)
        .def_readonly("weights", &OperatorSet::weights)
        .def_readonly("laplacian", &OperatorSet::laplacian)
        .def_readonly("laplacian_pinv", &OperatorSet::laplacian_pinv)
        .def_readonly("projection", &OperatorSet::projection)
        .def_readonly("tree_edges", &OperatorSet::tree_edges)
        .def_readonly("tree_incidence", &OperatorSet::tree_incidence)
        .def_readonly("tree_sharp", &OperatorSet::tree_sharp)
        .def_readonly("norm_projection_inf", &OperatorSet::norm_projection_inf)
        .def_readonly("norm_tree_sharp_inf", &OperatorSet::norm_tree_sharp_inf);

    m.def("build_operators", &build_operators, py::arg("network"));

    py::class_<SeriesExpansion>(m, "SeriesExpansion")
        .def_readonly("eta", &SeriesExpansion::eta)
        .def_readonly("order", &SeriesExpansion::order)
        .def_readonly("terms", &SeriesExpansion::terms)
        .def_readonly("node_terms", &SeriesExpansion::node_terms)
        .def("partial_sum", &SeriesExpansion::partial_sum, py::arg("n") = -1)
        .def("node_partial_sum", &SeriesExpansion::node_partial_sum, py::arg("n") = -1);

    m.def("expand", &expand, py::arg("ops"), py::arg("eta"), py::arg("order") = kDefaultSeriesOrder);
    m.def("edge_injection", &edge_injection, py::arg("ops"), py::arg("omega"));
    m.def("approximate_manifold", &approximate_manifold, py::arg("ops"), py::arg("omega"),
          py::arg("n") = kDefaultSeriesOrder);
    m.def(
        "approximate_test",
        [](const OperatorSet& ops, const Vector& omega, int n, double gamma) {
            const auto v = approximate_test(ops, omega, n, gamma);
            return py::make_tuple(v.pass, v.margin);
        },
        py::arg("ops"), py::arg("omega"), py::arg("n") = kDefaultSeriesOrder, py::arg("gamma"));

    m.def("g_function", &g_function, py::arg("x"));
    m.def("gamma_star", &gamma_star, py::arg("norm_projection"));

    py::class_<SyncCertificate>(m, "SyncCertificate")
        .def_readonly("norm_projection", &SyncCertificate::norm_projection)
        .def_readonly("norm_tree_sharp", &SyncCertificate::norm_tree_sharp)
        .def_readonly("gamma_star", &SyncCertificate::gamma_star)
        .def_readonly("g_value", &SyncCertificate::g_value)
        .def_readonly("omega_bound", &SyncCertificate::omega_bound)
        .def_readonly("omega_s_bound", &SyncCertificate::omega_s_bound)
        .def_readonly("edge_norm", &SyncCertificate::edge_norm)
        .def_readonly("tree_norm", &SyncCertificate::tree_norm)
        .def_readonly("in_omega", &SyncCertificate::in_omega)
        .def_readonly("omega_margin", &SyncCertificate::omega_margin)
        .def_readonly("in_omega_s", &SyncCertificate::in_omega_s)
        .def_readonly("omega_s_margin", &SyncCertificate::omega_s_margin)
        .def_readonly("tree_edges", &SyncCertificate::tree_edges);

    m.def("certificate", &certificate, py::arg("ops"), py::arg("omega"));
    m.def("in_cohesive_set", &in_cohesive_set, py::arg("ops"), py::arg("x"), py::arg("gamma"));

    py::class_<EquilibriumResult>(m, "EquilibriumResult")
        .def_readonly("theta_star", &EquilibriumResult::theta_star)
        .def_readonly("residual_inf", &EquilibriumResult::residual_inf)
        .def_readonly("iterations", &EquilibriumResult::iterations)
        .def_readonly("max_edge_angle", &EquilibriumResult::max_edge_angle)
        .def_readonly("stable", &EquilibriumResult::stable);

    m.def("kuramoto_map", &kuramoto_map, py::arg("ops"), py::arg("x"));
    m.def(
        "newton_solve",
        [](const OperatorSet& ops, const Vector& omega, const Vector& x0, double gamma_cap, double tol, int max_iter) {
            NewtonOptions options;
            options.gamma_cap = gamma_cap;
            options.tol = tol;
            options.max_iter = max_iter;
            return newton_solve(ops, omega, x0, options);
        },
        py::arg("ops"), py::arg("omega"), py::arg("x0"), py::arg("gamma_cap") = NewtonOptions{}.gamma_cap,
        py::arg("tol") = NewtonOptions{}.tol, py::arg("max_iter") = NewtonOptions{}.max_iter);
    m.def(
        "simulate",
        [](const OperatorSet& ops, const Vector& omega, const Vector& theta0, double t_end, double dt) {
            const auto s = simulate(ops, omega, theta0, {t_end, dt});
            return py::make_tuple(s.final_theta, s.frequency_spread);
        },
        py::arg("ops"), py::arg("omega"), py::arg("theta0"), py::arg("t_end") = 100.0, py::arg("dt") = 0.01);
    m.def("q_operator_apply", &q_operator_apply, py::arg("ops"), py::arg("y"), py::arg("x"));
    m.def("q_operator_inverse_apply", &q_operator_inverse_apply, py::arg("ops"), py::arg("z"), py::arg("v"));

    m.def(
        "load_case",
        [](const std::string& path, double K) {
            const auto data = load_case_file(path);
            auto [net, omega] = to_kuramoto(data, K);
            return py::make_tuple(net, omega);
        },
        py::arg("path"), py::arg("K") = 1.0, "Reads a case file and returns (Network, omega) at loading K.");
    m.def(
        "parse_matpower",
        [](const std::string& text) { return json_to_python(case_to_json(parse_matpower(text))); },
        py::arg("text"), "Parses MATPOWER text into the native JSON case layout (as a dict).");
    m.def("random_network", &random_network, py::arg("n"), py::arg("p"), py::arg("w_min"), py::arg("w_max"),
          py::arg("seed"));

    m.def(
        "sweep",
        [](const OperatorSet& ops, const Vector& omega_unit, std::vector<int> orders, double gamma, double k_min,
           double k_max, int steps, const std::string& init) {
            SweepOptions options;
            options.orders = std::move(orders);
            options.gamma = gamma;
            options.k_min = k_min;
            options.k_max = k_max;
            options.steps = steps;
            options.init = parse_initial_guess(init);
            return json_to_python(to_json(run_sweep(ops, omega_unit, options)));
        },
        py::arg("ops"), py::arg("omega_unit"), py::arg("orders") = std::vector<int>{kDefaultSeriesOrder},
        py::arg("gamma") = SweepOptions{}.gamma, py::arg("k_min") = 0.0, py::arg("k_max") = 0.0,
        py::arg("steps") = 200, py::arg("init") = "s5", "Runs a K sweep and returns the report as a dict.");
    m.def(
        "errors",
        [](const OperatorSet& ops, const Vector& omega, int max_order) {
            std::vector<double> out;
            for (const auto& r : error_table(ops, omega, max_order).rows) out.push_back(r.error);
            return out;
        },
        py::arg("ops"), py::arg("omega"), py::arg("max_order") = 5, "Errors of S_{2n+1} for n = 0..max_order.");
}
