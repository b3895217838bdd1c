#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ksync/network.hpp"
#include "ksync/operators.hpp"

namespace ksync {

enum class BusType { Load, Generator };

struct Bus {
    long id = 0;
    BusType type = BusType::Load;
    double vm = 1.0;     // voltage magnitude, p.u.
    double p_nom = 0.0;  // nominal net injection (generation - demand), p.u.

    friend bool operator==(const Bus&, const Bus&) = default;
};

struct Branch {
    long from = 0;
    long to = 0;
    double x = 0.0;  // series reactance, p.u.

    friend bool operator==(const Branch&, const Branch&) = default;
};

/// Lossless power-grid description reduced to what the Kuramoto form needs.
struct CaseData {
    std::string name;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;

    friend bool operator==(const CaseData&, const CaseData&) = default;
};

/// Checks unique bus ids, existing endpoints, x > 0 and connectivity.
/// Throws ParseError, NonPositiveReactance or DisconnectedCase.
void validate(const CaseData& data);

/// Parses a MATPOWER M-file case (mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch).
///
/// Out-of-service branches and generators are dropped, isolated buses (type 4)
/// are removed, parallel branches are merged (1/x adds up). A branch with
/// x <= 0 is folded into its neighbour when it hangs off a zero-injection,
/// non-generator bus of degree two (series compensation); the bus is then
/// eliminated and the two reactances add. Any remaining x <= 0 raises
/// NonPositiveReactance. Syntax problems raise ParseError with a line number.
CaseData parse_matpower(std::string_view text);

nlohmann::json case_to_json(const CaseData& data);
CaseData case_from_json(const nlohmann::json& j);

/// Reads a case from disk: `.m` as MATPOWER, anything else as native JSON.
CaseData load_case_file(const std::filesystem::path& path);

/// Edge weight |V_j||V_l| / x_jl, omega = K * p_nom projected onto 1^perp.
/// Throws DomainError if K <= 0, NonPositiveReactance if a branch has x <= 0.
std::pair<Network, Vector> to_kuramoto(const CaseData& data, double K);

/// Network file: {"name", "n", "edges": [{"from","to","weight"}], "omega": [...]}.
/// `omega` is optional (zeros when absent).
struct NetworkFile {
    Network network;
    Vector omega;
};

nlohmann::json network_to_json(const Network& net, const Vector& omega);
NetworkFile network_from_json(const nlohmann::json& j);
NetworkFile load_network_file(const std::filesystem::path& path);

/// Erdos-Renyi G(n, p) conditioned on connectivity: redrawn up to 1000 times,
/// after which edges of a random spanning tree are added. Weights are uniform
/// in [w_min, w_max]. Deterministic per seed.
Network random_network(std::size_t n, double p, double w_min, double w_max, std::uint64_t seed);

}  // namespace ksync
