#include "ksync/sweep.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ksync/errors.hpp"
#include "ksync/series.hpp"

namespace ksync {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void check_gamma(double gamma) {
    if (!(gamma >= 0.0 && gamma < std::numbers::pi / 2)) {
        throw Error(ErrorKind::DomainError, "gamma must lie in [0, pi/2)");
    }
}

// Solution inside D^G(gamma), if one is found.
std::optional<EquilibriumResult> cohesive_solution(const OperatorSet& ops, const Vector& omega,
                                                   double gamma, const Vector* warm) {
    auto r = solve_equilibrium(ops, omega, InitialGuess::S5, warm);
    if (r && r->max_edge_angle <= gamma) return r;
    return std::nullopt;
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

InitialGuess parse_initial_guess(const std::string& s) {
    if (s == "zero") return InitialGuess::Zero;
    if (s == "linear") return InitialGuess::Linear;
    if (s == "s5") return InitialGuess::S5;
    throw Error(ErrorKind::DomainError, "unknown initial guess '" + s + "' (zero|linear|s5)");
}

std::string to_string(InitialGuess init) {
    switch (init) {
        case InitialGuess::Zero: return "zero";
        case InitialGuess::Linear: return "linear";
        case InitialGuess::S5: return "s5";
    }
    return "s5";
}

Vector initial_guess(const OperatorSet& ops, const Vector& omega, InitialGuess init) {
    switch (init) {
        case InitialGuess::Zero: return Vector::Zero(static_cast<Eigen::Index>(ops.node_count()));
        case InitialGuess::Linear: return approximate_manifold(ops, omega, 0);
        case InitialGuess::S5: return approximate_manifold(ops, omega, 2);
    }
    return Vector::Zero(static_cast<Eigen::Index>(ops.node_count()));
}

std::optional<EquilibriumResult> solve_equilibrium(const OperatorSet& ops, const Vector& omega,
                                                   InitialGuess init, const Vector* warm,
                                                   const NewtonOptions& options) {
    std::vector<Vector> starts;
    starts.push_back(initial_guess(ops, omega, init));
    if (warm != nullptr) starts.push_back(*warm);
    if (init != InitialGuess::Linear) starts.push_back(initial_guess(ops, omega, InitialGuess::Linear));
    if (init != InitialGuess::Zero) starts.push_back(initial_guess(ops, omega, InitialGuess::Zero));
    for (const auto& x0 : starts) {
        try {
            return newton_solve(ops, omega, x0, options);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoConvergence && e.kind() != ErrorKind::LeftDomain) throw;
        }
    }
    return std::nullopt;
}

double oracle_threshold(const OperatorSet& ops, const Vector& omega_unit, double gamma) {
    check_gamma(gamma);
    const Vector unit = project_balanced(omega_unit, "oracle_threshold");
    const double eta_unit = inf_norm(ops.edge_from_node * unit);
    if (!(eta_unit > 1e-14)) throw Error(ErrorKind::DomainError, "omega is zero; no threshold");
    if (gamma == 0.0) return 0.0;

    const double step = 0.1 * gamma / eta_unit;
    double k_good = 0.0;
    Vector theta_good = Vector::Zero(unit.size());
    for (int round = 0; round < 100; ++round) {
        double k_bad = 0.0;
        for (int s = 0; s < 1000; ++s) {
            const double k = k_good + step;
            if (auto r = cohesive_solution(ops, k * unit, gamma, &theta_good)) {
                k_good = k;
                theta_good = r->theta_star;
            } else {
                k_bad = k;
                break;
            }
        }
        if (k_bad == 0.0) return std::numeric_limits<double>::infinity();

        while (k_bad - k_good > 1e-10 * k_bad) {
            const double mid = 0.5 * (k_good + k_bad);
            if (auto r = cohesive_solution(ops, mid * unit, gamma, &theta_good)) {
                k_good = mid;
                theta_good = r->theta_star;
            } else {
                k_bad = mid;
            }
        }
        // A Newton failure far from the last good point is not proof of
        // nonexistence; confirm right next to it.
        if (!cohesive_solution(ops, k_bad * unit, gamma, &theta_good)) return k_good;
    }
    return k_good;
}

double test_threshold(const OperatorSet& ops, const Vector& omega_unit, int n, double gamma,
                      double k_pass, double k_fail) {
    for (int it = 0; it < 200 && k_fail - k_pass > 1e-12 * k_fail; ++it) {
        const double mid = 0.5 * (k_pass + k_fail);
        if (approximate_test(ops, mid * omega_unit, n, gamma).pass) {
            k_pass = mid;
        } else {
            k_fail = mid;
        }
    }
    return k_pass;
}

SweepReport run_sweep(const OperatorSet& ops, const Vector& omega_unit, const SweepOptions& options,
                      std::string name) {
    check_gamma(options.gamma);
    if (options.steps < 1) throw Error(ErrorKind::DomainError, "steps must be positive");
    if (options.orders.empty()) throw Error(ErrorKind::DomainError, "no series orders requested");
    for (int n : options.orders) {
        if (n < 0 || n > kMaxSeriesOrder) throw Error(ErrorKind::InvalidRange, "series order out of range");
    }
    const Vector unit = project_balanced(omega_unit, "run_sweep");

    SweepReport report;
    report.name = std::move(name);
    report.gamma = options.gamma;
    report.tree_edges = ops.tree_edges;
    const double k_oracle = oracle_threshold(ops, unit, options.gamma);
    if (std::isfinite(k_oracle)) report.k_oracle = k_oracle;

    std::vector<double> grid;
    if (options.k_max > 0.0) {
        if (!(options.k_min > 0.0) || options.k_min > options.k_max) {
            throw Error(ErrorKind::DomainError, "K range must satisfy 0 < K-min <= K-max");
        }
        for (int i = 0; i < options.steps; ++i) {
            const double t = options.steps == 1 ? 0.0 : static_cast<double>(i) / (options.steps - 1);
            grid.push_back(options.k_min + t * (options.k_max - options.k_min));
        }
    } else {
        if (!report.k_oracle) throw Error(ErrorKind::OracleFailed, "oracle threshold is unbounded");
        for (int i = 1; i <= options.steps; ++i) grid.push_back(i * 1.2 * k_oracle / options.steps);
    }

    std::optional<Vector> warm;
    for (double K : grid) {
        SweepRow row;
        row.K = K;
        const Vector omega = K * unit;
        row.eta_norm = inf_norm(ops.edge_from_node * omega);

        for (int n : options.orders) {
            OrderOutcome out;
            out.order = n;
            const auto start = Clock::now();
            const auto verdict = approximate_test(ops, omega, n, options.gamma);
            out.time_s = seconds_since(start);
            out.pass = verdict.pass;
            out.margin = verdict.margin;
            out.norm = verdict.norm;
            row.tests.push_back(out);
        }

        const auto start = Clock::now();
        const auto solution = solve_equilibrium(ops, omega, options.init, warm ? &*warm : nullptr);
        row.oracle_time_s = seconds_since(start);
        if (solution) {
            row.oracle_max_angle = solution->max_edge_angle;
            row.oracle_exists = solution->max_edge_angle <= options.gamma;
            warm = solution->theta_star;
            for (auto& out : row.tests) {
                out.error = inf_norm(approximate_manifold(ops, omega, out.order) - solution->theta_star);
            }
        }
        report.rows.push_back(std::move(row));
    }

    for (std::size_t idx = 0; idx < options.orders.size(); ++idx) {
        OrderSummary s;
        s.order = options.orders[idx];
        std::size_t agree = 0;
        double ratio_sum = 0.0;
        std::optional<std::size_t> first_fail;
        for (std::size_t r = 0; r < report.rows.size(); ++r) {
            const auto& row = report.rows[r];
            const auto& t = row.tests[idx];
            if (t.pass == row.oracle_exists) ++agree;
            if (row.oracle_time_s > 0.0) ratio_sum += t.time_s / row.oracle_time_s;
            if (!t.pass && !first_fail) first_fail = r;
        }
        s.agreement = static_cast<double>(agree) / static_cast<double>(report.rows.size());
        s.mean_time_ratio = ratio_sum / static_cast<double>(report.rows.size());
        if (first_fail) {
            const double k_fail = report.rows[*first_fail].K;
            const double k_pass = *first_fail == 0 ? 0.0 : report.rows[*first_fail - 1].K;
            s.k_test = test_threshold(ops, unit, s.order, options.gamma, k_pass, k_fail);
        }
        report.summary.push_back(s);
    }
    return report;
}

nlohmann::json to_json(const SweepReport& report) {
    auto opt = [](const std::optional<double>& v) -> nlohmann::json {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    nlohmann::json j;
    j["name"] = report.name;
    j["gamma"] = report.gamma;
    j["k_oracle"] = opt(report.k_oracle);
    j["tree_edges"] = report.tree_edges;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json r;
        r["K"] = row.K;
        r["eta_norm"] = row.eta_norm;
        r["oracle_exists"] = row.oracle_exists;
        r["oracle_max_angle"] = opt(row.oracle_max_angle);
        r["oracle_time_s"] = row.oracle_time_s;
        r["tests"] = nlohmann::json::array();
        for (const auto& t : row.tests) {
            r["tests"].push_back({{"order", t.order},
                                  {"pass", t.pass},
                                  {"margin", t.margin},
                                  {"norm", t.norm},
                                  {"error", opt(t.error)},
                                  {"time_s", t.time_s}});
        }
        j["rows"].push_back(std::move(r));
    }
    j["summary"] = nlohmann::json::array();
    for (const auto& s : report.summary) {
        j["summary"].push_back({{"order", s.order},
                                {"k_test", opt(s.k_test)},
                                {"agreement", s.agreement},
                                {"mean_time_ratio", s.mean_time_ratio}});
    }
    return j;
}

const char* const kSweepCsvHeader =
    "K,eta_inf,order,test_pass,test_margin,oracle_exists,oracle_max_angle,error_inf,test_time_s,"
    "oracle_time_s,time_ratio";

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
    out << kSweepCsvHeader << '\n';
    for (const auto& row : report.rows) {
        for (const auto& t : row.tests) {
            const double ratio = row.oracle_time_s > 0.0 ? t.time_s / row.oracle_time_s : 0.0;
            out << fmt(row.K) << ',' << fmt(row.eta_norm) << ',' << t.order << ',' << (t.pass ? 1 : 0)
                << ',' << fmt(t.margin) << ',' << (row.oracle_exists ? 1 : 0) << ','
                << fmt(row.oracle_max_angle) << ',' << fmt(t.error) << ',' << fmt(t.time_s) << ','
                << fmt(row.oracle_time_s) << ',' << fmt(ratio) << '\n';
        }
    }
}

std::vector<SweepCsvRecord> read_sweep_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kSweepCsvHeader) {
        throw Error(ErrorKind::ParseError, "sweep CSV: unexpected header");
    }
    std::vector<SweepCsvRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 11) {
            throw Error(ErrorKind::ParseError, "sweep CSV line " + std::to_string(line_no) + ": expected 11 fields");
        }
        auto num = [&](const std::string& s) {
            try {
                return std::stod(s);
            } catch (const std::exception&) {
                throw Error(ErrorKind::ParseError, "sweep CSV line " + std::to_string(line_no) + ": bad number");
            }
        };
        auto opt = [&](const std::string& s) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            return num(s);
        };
        SweepCsvRecord r;
        r.K = num(f[0]);
        r.eta_inf = num(f[1]);
        r.order = static_cast<int>(num(f[2]));
        r.test_pass = f[3] == "1";
        r.test_margin = num(f[4]);
        r.oracle_exists = f[5] == "1";
        r.oracle_max_angle = opt(f[6]);
        r.error_inf = opt(f[7]);
        r.test_time_s = num(f[8]);
        r.oracle_time_s = num(f[9]);
        r.time_ratio = num(f[10]);
        records.push_back(r);
    }
    return records;
}

ErrorTable error_table(const OperatorSet& ops, const Vector& omega, int max_order, InitialGuess init) {
    if (max_order < 0 || max_order > kMaxSeriesOrder) {
        throw Error(ErrorKind::InvalidRange, "max order out of range");
    }
    const Vector w = project_balanced(omega, "error_table");
    auto solution = solve_equilibrium(ops, w, init);
    if (!solution) throw Error(ErrorKind::OracleFailed, "Newton oracle found no equilibrium");

    ErrorTable table;
    table.certificate = certificate(ops, w);
    const auto series = expand(ops, ops.edge_from_node * w, max_order);
    for (int n = 0; n <= max_order; ++n) {
        Vector s = series.node_partial_sum(n);
        s.array() -= s.mean();
        table.rows.push_back({n, inf_norm(s - solution->theta_star), table.certificate.in_omega_s});
    }
    table.oracle = std::move(*solution);
    return table;
}

const char* const kErrorCsvHeader = "order,index,error_inf,in_omega_s";

void write_error_csv(std::ostream& out, const ErrorTable& table) {
    out << kErrorCsvHeader << '\n';
    for (const auto& r : table.rows) {
        out << r.order << ',' << (2 * r.order + 1) << ',' << fmt(r.error) << ','
            << (r.in_omega_s ? 1 : 0) << '\n';
    }
}

}  // namespace ksync
