#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ksync/certificate.hpp"
#include "ksync/oracle.hpp"
#include "ksync/operators.hpp"

namespace ksync {

enum class InitialGuess { Zero, Linear, S5 };

InitialGuess parse_initial_guess(const std::string& s);
std::string to_string(InitialGuess init);

/// Initial phase vector for the oracle.
Vector initial_guess(const OperatorSet& ops, const Vector& omega, InitialGuess init);

/// Newton from `warm` (if given), then from `init`, then from the linear and
/// zero guesses. Returns nothing if every start fails.
std::optional<EquilibriumResult> solve_equilibrium(const OperatorSet& ops, const Vector& omega,
                                                   InitialGuess init,
                                                   const Vector* warm = nullptr,
                                                   const NewtonOptions& options = {});

/// Largest K such that K * omega_unit has a solution in D^G(gamma), found by
/// continuation in K followed by bisection (relative width 1e-10).
/// Throws DomainError if omega_unit is (numerically) zero.
double oracle_threshold(const OperatorSet& ops, const Vector& omega_unit, double gamma);

/// Largest K with T_{2n+1} passing, bisected between a passing and a failing K.
double test_threshold(const OperatorSet& ops, const Vector& omega_unit, int n, double gamma,
                      double k_pass, double k_fail);

struct SweepOptions {
    /// Uniform grid k_min..k_max (inclusive). With k_max <= 0 the grid is
    /// K_i = i * 1.2 * K_oracle / steps, i = 1..steps.
    double k_min = 0.0;
    double k_max = 0.0;
    int steps = 200;
    std::vector<int> orders{2};
    double gamma = 0.7853981633974483;
    InitialGuess init = InitialGuess::S5;
};

struct OrderOutcome {
    int order = 0;
    bool pass = false;
    double margin = 0.0;
    double norm = 0.0;
    std::optional<double> error;  // E_{2n+1} when the oracle solved
    double time_s = 0.0;
};

struct SweepRow {
    double K = 0.0;
    double eta_norm = 0.0;  // ||B^T L^+ omega(K)||_inf
    std::vector<OrderOutcome> tests;
    bool oracle_exists = false;  // solution in D^G(gamma)
    std::optional<double> oracle_max_angle;
    double oracle_time_s = 0.0;
};

struct OrderSummary {
    int order = 0;
    std::optional<double> k_test;  // empty if the test never failed on the grid
    double agreement = 0.0;        // fraction of rows matching the oracle verdict
    double mean_time_ratio = 0.0;  // mean of test time / oracle time
};

struct SweepReport {
    std::string name;
    double gamma = 0.0;
    std::optional<double> k_oracle;
    std::vector<std::size_t> tree_edges;
    std::vector<SweepRow> rows;
    std::vector<OrderSummary> summary;
};

/// Runs T_{2n+1} for each requested order and the Newton oracle at every K of
/// the grid; omega(K) = K * omega_unit. Rows are ordered by K. A failing
/// oracle marks the row as "no solution" and the sweep continues.
SweepReport run_sweep(const OperatorSet& ops, const Vector& omega_unit, const SweepOptions& options,
                      std::string name = {});

nlohmann::json to_json(const SweepReport& report);

/// Fixed CSV layout, one line per (K, order):
/// K,eta_inf,order,test_pass,test_margin,oracle_exists,oracle_max_angle,error_inf,test_time_s,oracle_time_s,time_ratio
extern const char* const kSweepCsvHeader;
void write_sweep_csv(std::ostream& out, const SweepReport& report);

struct SweepCsvRecord {
    double K = 0.0;
    double eta_inf = 0.0;
    int order = 0;
    bool test_pass = false;
    double test_margin = 0.0;
    bool oracle_exists = false;
    std::optional<double> oracle_max_angle;
    std::optional<double> error_inf;
    double test_time_s = 0.0;
    double oracle_time_s = 0.0;
    double time_ratio = 0.0;
};

std::vector<SweepCsvRecord> read_sweep_csv(std::istream& in);

struct ErrorRow {
    int order = 0;           // n in S_{2n+1}
    double error = 0.0;      // ||S_{2n+1} - theta*||_inf
    bool in_omega_s = false;
};

struct ErrorTable {
    std::vector<ErrorRow> rows;
    EquilibriumResult oracle;
    SyncCertificate certificate;
};

/// E_{2n+1} for n = 0..max_order. Throws OracleFailed if Newton finds no
/// solution.
ErrorTable error_table(const OperatorSet& ops, const Vector& omega, int max_order,
                       InitialGuess init = InitialGuess::S5);

extern const char* const kErrorCsvHeader;
void write_error_csv(std::ostream& out, const ErrorTable& table);

}  // namespace ksync
