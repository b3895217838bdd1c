// ksync: command-line front end for the synchronization analysis pipeline.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ksync/case_io.hpp"
#include "ksync/certificate.hpp"
#include "ksync/errors.hpp"
#include "ksync/oracle.hpp"
#include "ksync/series.hpp"
#include "ksync/sweep.hpp"

using namespace ksync;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInputError = 1, kNoConvergence = 2, kInternal = 3 };

struct Input {
    std::string case_path;
    std::string network_path;
    std::string format = "table";
    std::string out_path;
};

struct Problem {
    std::string name;
    OperatorSet ops;
    Vector omega_unit;  // omega at K = 1
};

Problem load_problem(const Input& in) {
    if (!in.case_path.empty()) {
        const auto data = load_case_file(in.case_path);
        auto [net, omega] = to_kuramoto(data, 1.0);
        return {data.name, build_operators(net), omega};
    }
    if (!in.network_path.empty()) {
        auto file = load_network_file(in.network_path);
        const std::string name = file.network.name();
        return {name, build_operators(file.network), file.omega};
    }
    throw Error(ErrorKind::IoError, "one of --case or --network is required");
}

void require_positive_k(double K) {
    if (!(K > 0.0)) throw Error(ErrorKind::DomainError, "K must be positive");
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json certificate_json(const SyncCertificate& c) {
    return {{"norm_P", c.norm_projection},
            {"norm_tree_sharp", c.norm_tree_sharp},
            {"gamma_star", c.gamma_star},
            {"g", c.g_value},
            {"omega_bound", c.omega_bound},
            {"omega_s_bound", c.omega_s_bound},
            {"edge_norm", c.edge_norm},
            {"tree_norm", c.tree_norm},
            {"in_omega", c.in_omega},
            {"omega_margin", c.omega_margin},
            {"in_omega_s", c.in_omega_s},
            {"omega_s_margin", c.omega_s_margin},
            {"tree_edges", c.tree_edges}};
}

// Flat key/value printing for the table format.
class Table {
public:
    template <typename T>
    void row(const std::string& key, const T& value) {
        std::ostringstream s;
        s << std::setprecision(12) << value;
        rows_.emplace_back(key, s.str());
    }
    void row(const std::string& key, bool value) { rows_.emplace_back(key, value ? "yes" : "no"); }
    void vector(const std::string& key, const Vector& v) {
        std::ostringstream s;
        s << std::setprecision(12);
        for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? " " : "") << v(i);
        rows_.emplace_back(key, s.str());
    }
    void print(std::ostream& out) const {
        std::size_t width = 0;
        for (const auto& [k, v] : rows_) width = std::max(width, k.size());
        for (const auto& [k, v] : rows_) out << std::left << std::setw(static_cast<int>(width + 2)) << k << v << '\n';
    }

private:
    std::vector<std::pair<std::string, std::string>> rows_;
};

void certificate_rows(Table& t, const SyncCertificate& c, bool with_omega) {
    t.row("norm_P", c.norm_projection);
    t.row("norm_tree_sharp", c.norm_tree_sharp);
    t.row("gamma_star", c.gamma_star);
    t.row("g", c.g_value);
    t.row("omega_bound", c.omega_bound);
    t.row("omega_s_bound", c.omega_s_bound);
    std::ostringstream tree;
    for (std::size_t i = 0; i < c.tree_edges.size(); ++i) tree << (i ? " " : "") << c.tree_edges[i];
    t.row("tree_edges", tree.str());
    if (with_omega) {
        t.row("edge_norm", c.edge_norm);
        t.row("in_omega", c.in_omega);
        t.row("omega_margin", c.omega_margin);
        t.row("tree_norm", c.tree_norm);
        t.row("in_omega_s", c.in_omega_s);
        t.row("omega_s_margin", c.omega_s_margin);
    }
}

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw Error(ErrorKind::IoError, "cannot write " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

void require_format(const std::string& format, std::initializer_list<const char*> allowed) {
    for (const char* f : allowed) {
        if (format == f) return;
    }
    throw Error(ErrorKind::DomainError, "format '" + format + "' not supported by this command");
}

int run_analyze(const Input& in, std::optional<double> K) {
    require_format(in.format, {"table", "json"});
    const auto p = load_problem(in);
    const auto c = certificate(p.ops, p.omega_unit * K.value_or(1.0));
    Output out(in.out_path);
    if (in.format == "json") {
        json j = certificate_json(c);
        j["name"] = p.name;
        j["n"] = p.ops.node_count();
        j["m"] = p.ops.edge_count();
        if (!K) {
            for (const char* key : {"edge_norm", "tree_norm", "in_omega", "omega_margin", "in_omega_s", "omega_s_margin"}) {
                j.erase(key);
            }
        } else {
            j["K"] = *K;
        }
        out.stream() << j.dump(2) << '\n';
    } else {
        Table t;
        t.row("name", p.name);
        t.row("n", p.ops.node_count());
        t.row("m", p.ops.edge_count());
        if (K) t.row("K", *K);
        certificate_rows(t, c, K.has_value());
        t.print(out.stream());
    }
    return kOk;
}

int run_approx(const Input& in, double K, std::vector<int> orders, double gamma) {
    require_format(in.format, {"table", "json"});
    if (orders.empty()) orders.push_back(kDefaultSeriesOrder);
    const auto p = load_problem(in);
    const Vector omega = K * p.omega_unit;
    const auto c = certificate(p.ops, omega);
    Output out(in.out_path);
    json j{{"name", p.name}, {"K", K}, {"gamma", gamma}, {"tests", json::array()}};
    Table t;
    t.row("name", p.name);
    t.row("K", K);
    t.row("gamma", gamma);
    for (int n : orders) {
        const auto v = approximate_test(p.ops, omega, n, gamma);
        const Vector s = approximate_manifold(p.ops, omega, n);
        const std::string label = "T" + std::to_string(2 * n + 1);
        j["tests"].push_back({{"order", n}, {"pass", v.pass}, {"margin", v.margin}, {"norm", v.norm}, {"S", to_json(s)}});
        t.row(label, std::string(v.pass ? "pass" : "fail"));
        t.row(label + "_margin", v.margin);
        t.vector("S" + std::to_string(2 * n + 1), s);
    }
    j["certificate"] = certificate_json(c);
    if (in.format == "json") {
        out.stream() << j.dump(2) << '\n';
    } else {
        t.row("in_omega", c.in_omega);
        t.row("omega_margin", c.omega_margin);
        t.row("in_omega_s", c.in_omega_s);
        t.row("omega_s_margin", c.omega_s_margin);
        t.print(out.stream());
    }
    return kOk;
}

int run_solve(const Input& in, double K, double gamma, const std::string& init_name) {
    require_format(in.format, {"table", "json"});
    const auto init = parse_initial_guess(init_name);
    const auto p = load_problem(in);
    const Vector omega = K * p.omega_unit;
    const auto r = newton_solve(p.ops, omega, initial_guess(p.ops, omega, init));
    const bool cohesive = in_cohesive_set(p.ops, r.theta_star, gamma);
    Output out(in.out_path);
    if (in.format == "json") {
        json j{{"name", p.name},
               {"K", K},
               {"gamma", gamma},
               {"init", init_name},
               {"theta", to_json(r.theta_star)},
               {"residual_inf", r.residual_inf},
               {"iterations", r.iterations},
               {"max_edge_angle", r.max_edge_angle},
               {"in_gamma", cohesive},
               {"stable", r.stable}};
        out.stream() << j.dump(2) << '\n';
    } else {
        Table t;
        t.row("name", p.name);
        t.row("K", K);
        t.row("residual_inf", r.residual_inf);
        t.row("iterations", r.iterations);
        t.row("max_edge_angle", r.max_edge_angle);
        t.row("in_gamma", cohesive);
        t.row("stable", r.stable);
        t.vector("theta", r.theta_star);
        t.print(out.stream());
    }
    return kOk;
}

int run_sweep_cmd(const Input& in, SweepOptions options) {
    if (options.orders.empty()) options.orders.push_back(kDefaultSeriesOrder);
    const auto p = load_problem(in);
    const auto report = run_sweep(p.ops, p.omega_unit, options, p.name);
    Output out(in.out_path);
    if (in.format == "csv") {
        write_sweep_csv(out.stream(), report);
    } else if (in.format == "json") {
        out.stream() << to_json(report).dump(2) << '\n';
    } else {
        auto& s = out.stream();
        s << std::setprecision(6);
        s << "name " << report.name << "  gamma " << report.gamma << "  K_oracle ";
        if (report.k_oracle) s << *report.k_oracle; else s << "none";
        s << "  rows " << report.rows.size() << '\n';
        s << std::left << std::setw(8) << "order" << std::setw(14) << "K_test" << std::setw(12) << "agreement"
          << "time_ratio\n";
        for (const auto& o : report.summary) {
            s << std::setw(8) << ("T" + std::to_string(2 * o.order + 1)) << std::setw(14);
            if (o.k_test) s << *o.k_test; else s << "none";
            s << std::setw(12) << o.agreement << o.mean_time_ratio << '\n';
        }
    }
    return kOk;
}

int run_errors(const Input& in, double K, std::vector<int> orders, const std::string& init_name) {
    require_format(in.format, {"table", "csv", "json"});
    const int max_order = orders.empty() ? 5 : *std::max_element(orders.begin(), orders.end());
    const auto p = load_problem(in);
    const auto table = error_table(p.ops, K * p.omega_unit, max_order, parse_initial_guess(init_name));
    Output out(in.out_path);
    if (in.format == "json") {
        json rows = json::array();
        for (const auto& r : table.rows) {
            rows.push_back({{"order", r.order}, {"index", 2 * r.order + 1}, {"error_inf", r.error}, {"in_omega_s", r.in_omega_s}});
        }
        out.stream() << json{{"name", p.name}, {"K", K}, {"rows", rows}, {"certificate", certificate_json(table.certificate)}}.dump(2)
                     << '\n';
    } else {
        // The table format is the CSV itself; it is already human readable.
        write_error_csv(out.stream(), table);
    }
    return kOk;
}

int run_generate(const Input& in, std::size_t nodes, double p, double w_min, double w_max, std::uint64_t seed) {
    const auto net = random_network(nodes, p, w_min, w_max, seed);
    Output out(in.out_path);
    out.stream() << network_to_json(net, Vector::Zero(static_cast<Eigen::Index>(nodes))).dump(2) << '\n';
    return kOk;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NoConvergence:
        case ErrorKind::LeftDomain:
        case ErrorKind::OracleFailed:
            return kNoConvergence;
        case ErrorKind::RankDeficient:
            return kInternal;
        default:
            return kInputError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kuramoto synchronization analysis: series tests, certificates and a Newton oracle"};
    app.require_subcommand(1);

    Input in;
    double K = 1.0;
    double gamma = std::numbers::pi / 4;
    std::vector<int> orders;
    std::string init = "s5";
    SweepOptions sweep;
    std::size_t nodes = 10;
    double edge_p = 0.3, w_min = 0.1, w_max = 10.0;
    std::uint64_t seed = 0;

    auto add_input = [&](CLI::App* cmd) {
        auto* c = cmd->add_option("--case", in.case_path, "MATPOWER (.m) or JSON case file");
        auto* n = cmd->add_option("--network", in.network_path, "JSON network file");
        c->excludes(n);
        cmd->add_option("--format", in.format, "Output format")->check(CLI::IsMember({"table", "csv", "json"}));
        cmd->add_option("--out", in.out_path, "Write output to FILE instead of stdout");
    };

    auto* analyze = app.add_subcommand("analyze", "Graph operators and certificate bounds");
    add_input(analyze);
    auto* analyze_k = analyze->add_option("--K", K, "Also test omega(K) against the certificate");

    auto* approx = app.add_subcommand("approx", "Approximate synchronization test and manifold");
    add_input(approx);
    approx->add_option("--K", K, "Loading factor")->capture_default_str();
    approx->add_option("--order", orders, "Series order n (repeatable)");
    approx->add_option("--gamma", gamma, "Cohesion angle in [0, pi/2)")->capture_default_str();

    auto* solve = app.add_subcommand("solve", "Newton oracle for the nodal balance equations");
    add_input(solve);
    solve->add_option("--K", K, "Loading factor")->capture_default_str();
    solve->add_option("--gamma", gamma, "Cohesion angle reported against")->capture_default_str();
    solve->add_option("--init", init, "Initial guess")->check(CLI::IsMember({"zero", "linear", "s5"}));

    auto* sweep_cmd = app.add_subcommand("sweep", "Compare tests with the oracle over a K grid");
    add_input(sweep_cmd);
    sweep_cmd->add_option("--K-min", sweep.k_min, "Smallest K");
    sweep_cmd->add_option("--K-max", sweep.k_max, "Largest K (default: 1.2 times the oracle threshold)");
    sweep_cmd->add_option("--steps", sweep.steps, "Number of grid points")->capture_default_str();
    sweep_cmd->add_option("--order", orders, "Series order n (repeatable)");
    sweep_cmd->add_option("--gamma", gamma, "Cohesion angle in [0, pi/2)")->capture_default_str();
    sweep_cmd->add_option("--init", init, "Initial guess")->check(CLI::IsMember({"zero", "linear", "s5"}));

    auto* errors = app.add_subcommand("errors", "Errors of S_{2n+1} against the oracle");
    add_input(errors);
    errors->add_option("--K", K, "Loading factor")->capture_default_str();
    errors->add_option("--order", orders, "Highest series order n (default 5)");
    errors->add_option("--init", init, "Initial guess")->check(CLI::IsMember({"zero", "linear", "s5"}));

    auto* generate = app.add_subcommand("generate", "Random connected network as JSON");
    generate->add_option("--nodes", nodes, "Node count")->capture_default_str();
    generate->add_option("--p", edge_p, "Edge probability")->capture_default_str();
    generate->add_option("--w-min", w_min, "Smallest weight")->capture_default_str();
    generate->add_option("--w-max", w_max, "Largest weight")->capture_default_str();
    generate->add_option("--seed", seed, "Random seed")->capture_default_str();
    generate->add_option("--out", in.out_path, "Write output to FILE instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kInputError;
    }

    try {
        if (*analyze || *approx || *solve || *errors) require_positive_k(K);
        if (*analyze) {
            return run_analyze(in, *analyze_k ? std::optional<double>(K) : std::nullopt);
        }
        if (*approx) return run_approx(in, K, orders, gamma);
        if (*solve) return run_solve(in, K, gamma, init);
        if (*sweep_cmd) {
            sweep.orders = orders.empty() ? std::vector<int>{kDefaultSeriesOrder} : orders;
            sweep.gamma = gamma;
            sweep.init = parse_initial_guess(init);
            return run_sweep_cmd(in, sweep);
        }
        if (*errors) return run_errors(in, K, orders, init);
        if (*generate) return run_generate(in, nodes, edge_p, w_min, w_max, seed);
    } catch (const Error& e) {
        std::cerr << "ksync: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "ksync: malformed JSON: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "ksync: internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kInternal;
}
