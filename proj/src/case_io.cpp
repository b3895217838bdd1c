#include "ksync/case_io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "ksync/errors.hpp"

namespace ksync {

namespace {

struct MatrixRow {
    std::vector<double> values;
    int line = 0;
};

struct RawTables {
    std::string name;
    double base_mva = 100.0;
    bool has_base = false;
    std::map<std::string, std::vector<MatrixRow>> matrices;
    std::map<std::string, int> matrix_line;
};

[[noreturn]] void parse_fail(int line, const std::string& what) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_number(std::string_view token, int line) {
    std::string buf(token);
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(buf.c_str(), &end);
    if (end == buf.c_str() || *end != '\0') parse_fail(line, "bad number '" + buf + "'");
    return v;
}

// Appends the numbers in `body` to `row`; a ';' closes the current row.
void scan_matrix_text(std::string_view body, int line, MatrixRow& row,
                      std::vector<MatrixRow>& rows) {
    std::size_t i = 0;
    while (i < body.size()) {
        const char c = body[i];
        if (c == ';') {
            if (!row.values.empty()) rows.push_back(std::move(row));
            row = MatrixRow{};
            ++i;
        } else if (c == ' ' || c == '\t' || c == ',' || c == '\r') {
            ++i;
        } else {
            std::size_t j = i;
            while (j < body.size() && body[j] != ' ' && body[j] != '\t' && body[j] != ',' &&
                   body[j] != ';' && body[j] != '\r') {
                ++j;
            }
            if (row.values.empty()) row.line = line;
            row.values.push_back(parse_number(body.substr(i, j - i), line));
            i = j;
        }
    }
}

RawTables scan_matpower(std::string_view text) {
    RawTables raw;
    std::istringstream in{std::string(text)};
    std::string line_buf;
    int line_no = 0;
    std::string open_matrix;
    MatrixRow row;
    while (std::getline(in, line_buf)) {
        ++line_no;
        std::string_view line = line_buf;
        if (const auto pct = line.find('%'); pct != std::string_view::npos) line = line.substr(0, pct);
        line = trim(line);
        if (line.empty()) continue;

        if (!open_matrix.empty()) {
            auto& rows = raw.matrices[open_matrix];
            const auto close = line.find(']');
            scan_matrix_text(line.substr(0, close), line_no, row, rows);
            // A newline also ends a row.
            if (!row.values.empty()) {
                rows.push_back(std::move(row));
                row = MatrixRow{};
            }
            if (close != std::string_view::npos) open_matrix.clear();
            continue;
        }

        if (line.starts_with("function")) {
            if (const auto eq = line.find('='); eq != std::string_view::npos) {
                raw.name = std::string(trim(line.substr(eq + 1)));
            }
            continue;
        }
        if (!line.starts_with("mpc.")) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) parse_fail(line_no, "expected '=' in assignment");
        const std::string field(trim(line.substr(4, eq - 4)));
        std::string_view rhs = trim(line.substr(eq + 1));

        if (field == "baseMVA") {
            if (rhs.ends_with(';')) rhs.remove_suffix(1);
            raw.base_mva = parse_number(trim(rhs), line_no);
            raw.has_base = true;
        } else if (rhs.starts_with('[')) {
            if (raw.matrices.contains(field)) parse_fail(line_no, "duplicate table mpc." + field);
            auto& rows = raw.matrices[field];
            raw.matrix_line[field] = line_no;
            rhs.remove_prefix(1);
            const auto close = rhs.find(']');
            row = MatrixRow{};
            scan_matrix_text(rhs.substr(0, close), line_no, row, rows);
            if (!row.values.empty()) {
                rows.push_back(std::move(row));
                row = MatrixRow{};
            }
            if (close == std::string_view::npos) open_matrix = field;
        }
    }
    if (!open_matrix.empty()) parse_fail(line_no, "unterminated table mpc." + open_matrix);
    return raw;
}

struct WorkBranch {
    std::size_t a;
    std::size_t b;
    double x;
};

std::pair<std::size_t, std::size_t> key_of(std::size_t a, std::size_t b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
}

// Adds susceptances of parallel branches; keeps the first occurrence's slot.
std::vector<WorkBranch> merge_parallel(const std::vector<WorkBranch>& in) {
    std::vector<WorkBranch> out;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> slot;
    std::vector<double> susceptance;
    for (const auto& br : in) {
        if (br.x == 0.0) {
            throw Error(ErrorKind::NonPositiveReactance, "branch with zero reactance");
        }
        const auto k = key_of(br.a, br.b);
        if (auto it = slot.find(k); it != slot.end()) {
            susceptance[it->second] += 1.0 / br.x;
        } else {
            slot.emplace(k, out.size());
            out.push_back(br);
            susceptance.push_back(1.0 / br.x);
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (susceptance[i] == 0.0) {
            throw Error(ErrorKind::NonPositiveReactance, "parallel branches cancel out");
        }
        out[i].x = 1.0 / susceptance[i];
    }
    return out;
}

}  // namespace

void validate(const CaseData& data) {
    std::unordered_map<long, std::size_t> index;
    for (std::size_t i = 0; i < data.buses.size(); ++i) {
        if (!index.emplace(data.buses[i].id, i).second) {
            throw Error(ErrorKind::ParseError, "duplicate bus id " + std::to_string(data.buses[i].id));
        }
    }
    if (data.buses.size() < 2) throw Error(ErrorKind::ParseError, "case needs at least two buses");
    std::vector<Edge> edges;
    for (const auto& br : data.branches) {
        const auto f = index.find(br.from);
        const auto t = index.find(br.to);
        if (f == index.end() || t == index.end()) {
            throw Error(ErrorKind::ParseError, "branch " + std::to_string(br.from) + "-" +
                                                   std::to_string(br.to) + " references unknown bus");
        }
        if (!(br.x > 0.0)) {
            throw Error(ErrorKind::NonPositiveReactance,
                        "branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                            " has x = " + std::to_string(br.x));
        }
        edges.push_back({f->second, t->second, 1.0});
    }
    if (!is_connected(data.buses.size(), edges)) {
        throw Error(ErrorKind::DisconnectedCase, "case network is not connected");
    }
}

CaseData parse_matpower(std::string_view text) {
    const RawTables raw = scan_matpower(text);
    for (const char* required : {"bus", "branch"}) {
        if (!raw.matrices.contains(required)) {
            throw Error(ErrorKind::ParseError, std::string("missing table mpc.") + required);
        }
    }

    CaseData data;
    data.name = raw.name.empty() ? "case" : raw.name;
    data.base_mva = raw.base_mva;
    if (!(data.base_mva > 0.0)) throw Error(ErrorKind::ParseError, "baseMVA must be positive");

    std::unordered_map<long, std::size_t> index;
    std::set<long> isolated;
    std::vector<double> demand;
    for (const auto& row : raw.matrices.at("bus")) {
        if (row.values.size() < 8) parse_fail(row.line, "bus row needs at least 8 columns");
        const long id = std::lround(row.values[0]);
        const int type = static_cast<int>(std::lround(row.values[1]));
        if (index.contains(id) || isolated.contains(id)) {
            parse_fail(row.line, "duplicate bus id " + std::to_string(id));
        }
        if (type == 4) {
            isolated.insert(id);
            continue;
        }
        index.emplace(id, data.buses.size());
        Bus bus;
        bus.id = id;
        bus.type = (type == 2 || type == 3) ? BusType::Generator : BusType::Load;
        bus.vm = row.values[7];
        data.buses.push_back(bus);
        demand.push_back(row.values[2]);
    }

    std::vector<double> generation(data.buses.size(), 0.0);
    if (auto it = raw.matrices.find("gen"); it != raw.matrices.end()) {
        for (const auto& row : it->second) {
            if (row.values.size() < 2) parse_fail(row.line, "gen row needs at least 2 columns");
            const long bus_id = std::lround(row.values[0]);
            const bool in_service = row.values.size() < 8 || row.values[7] > 0.0;
            if (!in_service || isolated.contains(bus_id)) continue;
            const auto b = index.find(bus_id);
            if (b == index.end()) parse_fail(row.line, "generator at unknown bus " + std::to_string(bus_id));
            generation[b->second] += row.values[1];
            data.buses[b->second].type = BusType::Generator;
        }
    }
    for (std::size_t i = 0; i < data.buses.size(); ++i) {
        data.buses[i].p_nom = (generation[i] - demand[i]) / data.base_mva;
    }

    std::vector<WorkBranch> work;
    for (const auto& row : raw.matrices.at("branch")) {
        if (row.values.size() < 4) parse_fail(row.line, "branch row needs at least 4 columns");
        const bool in_service = row.values.size() < 11 || row.values[10] != 0.0;
        if (!in_service) continue;
        const long f = std::lround(row.values[0]);
        const long t = std::lround(row.values[1]);
        if (isolated.contains(f) || isolated.contains(t)) continue;
        const auto fi = index.find(f);
        const auto ti = index.find(t);
        if (fi == index.end() || ti == index.end()) parse_fail(row.line, "branch references unknown bus");
        if (f == t) parse_fail(row.line, "branch connects a bus to itself");
        work.push_back({fi->second, ti->second, row.values[3]});
    }
    work = merge_parallel(work);

    // Series compensation: eliminate zero-injection pass-through buses that
    // carry a non-positive reactance.
    std::vector<bool> removed(data.buses.size(), false);
    for (;;) {
        const auto bad = std::find_if(work.begin(), work.end(), [](const WorkBranch& b) { return b.x <= 0.0; });
        if (bad == work.end()) break;
        bool folded = false;
        for (const std::size_t v : {bad->a, bad->b}) {
            std::vector<std::size_t> incident;
            for (std::size_t k = 0; k < work.size(); ++k) {
                if (work[k].a == v || work[k].b == v) incident.push_back(k);
            }
            const auto& bus = data.buses[v];
            if (incident.size() != 2 || bus.p_nom != 0.0 || bus.type == BusType::Generator) continue;
            const auto& e1 = work[incident[0]];
            const auto& e2 = work[incident[1]];
            const std::size_t u1 = e1.a == v ? e1.b : e1.a;
            const std::size_t u2 = e2.a == v ? e2.b : e2.a;
            if (u1 == u2) continue;
            const double x = e1.x + e2.x;
            std::vector<WorkBranch> next;
            for (std::size_t k = 0; k < work.size(); ++k) {
                if (k == incident[0]) {
                    next.push_back({u1, u2, x});
                } else if (k != incident[1]) {
                    next.push_back(work[k]);
                }
            }
            work = merge_parallel(next);
            removed[v] = true;
            folded = true;
            break;
        }
        if (!folded) {
            throw Error(ErrorKind::NonPositiveReactance,
                        "branch " + std::to_string(data.buses[bad->a].id) + "-" +
                            std::to_string(data.buses[bad->b].id) + " has x = " +
                            std::to_string(bad->x) + " and cannot be folded");
        }
    }

    for (const auto& br : work) {
        data.branches.push_back({data.buses[br.a].id, data.buses[br.b].id, br.x});
    }
    std::vector<Bus> kept;
    for (std::size_t i = 0; i < data.buses.size(); ++i) {
        if (!removed[i]) kept.push_back(data.buses[i]);
    }
    data.buses = std::move(kept);
    validate(data);
    return data;
}

nlohmann::json case_to_json(const CaseData& data) {
    nlohmann::json j;
    j["name"] = data.name;
    j["base_mva"] = data.base_mva;
    j["buses"] = nlohmann::json::array();
    for (const auto& b : data.buses) {
        j["buses"].push_back({{"id", b.id},
                              {"type", b.type == BusType::Generator ? "generator" : "load"},
                              {"vm", b.vm},
                              {"p_nom", b.p_nom}});
    }
    j["branches"] = nlohmann::json::array();
    for (const auto& br : data.branches) {
        j["branches"].push_back({{"from", br.from}, {"to", br.to}, {"x", br.x}});
    }
    return j;
}

CaseData case_from_json(const nlohmann::json& j) {
    CaseData data;
    try {
        data.name = j.value("name", std::string("case"));
        data.base_mva = j.value("base_mva", 100.0);
        for (const auto& b : j.at("buses")) {
            Bus bus;
            bus.id = b.at("id").get<long>();
            bus.vm = b.at("vm").get<double>();
            bus.p_nom = b.at("p_nom").get<double>();
            const auto type = b.value("type", std::string("load"));
            if (type == "generator") {
                bus.type = BusType::Generator;
            } else if (type != "load") {
                throw Error(ErrorKind::ParseError, "unknown bus type '" + type + "'");
            }
            data.buses.push_back(bus);
        }
        for (const auto& br : j.at("branches")) {
            data.branches.push_back(
                {br.at("from").get<long>(), br.at("to").get<long>(), br.at("x").get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("case JSON: ") + e.what());
    }
    validate(data);
    return data;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json parse_json_text(const std::string& text, const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
    }
}

}  // namespace

CaseData load_case_file(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    if (path.extension() == ".m") return parse_matpower(text);
    return case_from_json(parse_json_text(text, path));
}

std::pair<Network, Vector> to_kuramoto(const CaseData& data, double K) {
    if (!(K > 0.0)) throw Error(ErrorKind::DomainError, "K must be positive");
    std::unordered_map<long, std::size_t> index;
    for (std::size_t i = 0; i < data.buses.size(); ++i) index.emplace(data.buses[i].id, i);

    std::vector<Edge> edges;
    edges.reserve(data.branches.size());
    for (const auto& br : data.branches) {
        if (!(br.x > 0.0)) {
            throw Error(ErrorKind::NonPositiveReactance,
                        "branch " + std::to_string(br.from) + "-" + std::to_string(br.to) +
                            " has x = " + std::to_string(br.x));
        }
        const auto f = index.at(br.from);
        const auto t = index.at(br.to);
        edges.push_back({f, t, data.buses[f].vm * data.buses[t].vm / br.x});
    }

    Vector omega(static_cast<Eigen::Index>(data.buses.size()));
    for (std::size_t i = 0; i < data.buses.size(); ++i) {
        omega(static_cast<Eigen::Index>(i)) = K * data.buses[i].p_nom;
    }
    omega.array() -= omega.mean();
    return {Network(data.buses.size(), std::move(edges), data.name), std::move(omega)};
}

nlohmann::json network_to_json(const Network& net, const Vector& omega) {
    nlohmann::json j;
    j["name"] = net.name();
    j["n"] = net.node_count();
    j["edges"] = nlohmann::json::array();
    for (const auto& e : net.edges()) {
        j["edges"].push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
    }
    j["omega"] = std::vector<double>(omega.data(), omega.data() + omega.size());
    return j;
}

NetworkFile network_from_json(const nlohmann::json& j) {
    try {
        const auto n = j.at("n").get<std::size_t>();
        std::vector<Edge> edges;
        for (const auto& e : j.at("edges")) {
            edges.push_back({e.at("from").get<std::size_t>(), e.at("to").get<std::size_t>(),
                             e.value("weight", 1.0)});
        }
        Vector omega = Vector::Zero(static_cast<Eigen::Index>(n));
        if (j.contains("omega")) {
            const auto values = j.at("omega").get<std::vector<double>>();
            if (values.size() != n) {
                throw Error(ErrorKind::DimensionMismatch, "omega length does not match n");
            }
            for (std::size_t i = 0; i < n; ++i) omega(static_cast<Eigen::Index>(i)) = values[i];
        }
        return {Network(n, std::move(edges), j.value("name", std::string("network"))), omega};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, std::string("network JSON: ") + e.what());
    }
}

NetworkFile load_network_file(const std::filesystem::path& path) {
    return network_from_json(parse_json_text(read_file(path), path));
}

Network random_network(std::size_t n, double p, double w_min, double w_max, std::uint64_t seed) {
    if (n < 2) throw Error(ErrorKind::DomainError, "random_network needs n >= 2");
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorKind::DomainError, "edge probability must be in (0, 1]");
    if (!(w_min > 0.0 && w_max >= w_min)) throw Error(ErrorKind::DomainError, "bad weight range");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto weight = [&] { return w_min == w_max ? w_min : w_min + (w_max - w_min) * unit(rng); };

    std::vector<Edge> edges;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        edges.clear();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (unit(rng) < p) edges.push_back({i, j, weight()});
            }
        }
        if (is_connected(n, edges)) return Network(n, std::move(edges));
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::set<std::pair<std::size_t, std::size_t>> present;
    for (const auto& e : edges) present.emplace(e.from, e.to);
    for (std::size_t i = 1; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        const auto k = key_of(order[i], order[pick(rng)]);
        if (present.insert(k).second) edges.push_back({k.first, k.second, weight()});
    }
    return Network(n, std::move(edges));
}

}  // namespace ksync
