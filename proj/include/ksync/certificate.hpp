#pragma once

#include <vector>

#include "ksync/operators.hpp"

namespace ksync {

/// g(x) = (y + sin y)/2 - x (y - sin y)/2 with y = arccos((x-1)/(x+1)).
/// Decreasing on [1, inf) from g(1) = 1 towards 0. Throws DomainError for x < 1.
double g_function(double x);

/// arccos((x-1)/(x+1)) for x = ||P||_inf >= 1.
double gamma_star(double norm_projection);

/// Convergence certificate for one natural-frequency vector.
struct SyncCertificate {
    double norm_projection = 0.0;   // ||P||_inf
    double norm_tree_sharp = 0.0;   // ||B#_s||_inf
    double gamma_star = 0.0;
    double g_value = 0.0;           // g(||P||_inf)
    double omega_bound = 0.0;       // bound on ||B^T L^+ omega||_inf
    double omega_s_bound = 0.0;     // bound on ||B_s^T L^+ omega||_inf
    double edge_norm = 0.0;         // ||B^T L^+ omega||_inf
    double tree_norm = 0.0;         // ||B_s^T L^+ omega||_inf
    bool in_omega = false;
    double omega_margin = 0.0;
    bool in_omega_s = false;
    double omega_s_margin = 0.0;
    std::vector<std::size_t> tree_edges;
};

/// Membership of B^T L^+ omega in Omega and of B_s^T L^+ omega in Omega^s.
/// Closed inequalities; margins are bound - norm.
SyncCertificate certificate(const OperatorSet& ops, const Vector& omega);

/// x in 1^perp (|1^T x| <= 1e-9) and ||B^T x||_inf <= gamma.
bool in_cohesive_set(const OperatorSet& ops, const Vector& x, double gamma);

}  // namespace ksync
