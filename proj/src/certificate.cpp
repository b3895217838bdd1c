#include "ksync/certificate.hpp"

#include <cmath>
#include <string>

#include "ksync/errors.hpp"

namespace ksync {

double gamma_star(double norm_projection) {
    if (!(norm_projection >= 1.0)) {
        throw Error(ErrorKind::DomainError,
                    "gamma* needs ||P||_inf >= 1, got " + std::to_string(norm_projection));
    }
    if (std::isinf(norm_projection)) return 0.0;
    return std::acos((norm_projection - 1.0) / (norm_projection + 1.0));
}

double g_function(double x) {
    if (!(x >= 1.0)) {
        throw Error(ErrorKind::DomainError, "g is defined on [1, inf), got " + std::to_string(x));
    }
    const double y = gamma_star(x);
    const double s = std::sin(y);
    return 0.5 * (y + s) - x * 0.5 * (y - s);
}

SyncCertificate certificate(const OperatorSet& ops, const Vector& omega) {
    if (static_cast<std::size_t>(omega.size()) != ops.node_count()) {
        throw Error(ErrorKind::DimensionMismatch, "omega length does not match node count");
    }
    const Vector centered = project_balanced(omega, "certificate");
    const Vector potential = ops.laplacian_pinv * centered;
    const Vector eta = ops.incidence.transpose() * potential;
    const Vector xi = ops.tree_incidence.transpose() * potential;

    SyncCertificate c;
    c.norm_projection = ops.norm_projection_inf;
    c.norm_tree_sharp = ops.norm_tree_sharp_inf;
    c.gamma_star = gamma_star(c.norm_projection);
    c.g_value = g_function(c.norm_projection);
    c.omega_bound = c.g_value;
    c.omega_s_bound = c.g_value / c.norm_tree_sharp;
    c.edge_norm = eta.size() == 0 ? 0.0 : eta.cwiseAbs().maxCoeff();
    c.tree_norm = xi.size() == 0 ? 0.0 : xi.cwiseAbs().maxCoeff();
    c.in_omega = c.edge_norm <= c.omega_bound;
    c.omega_margin = c.omega_bound - c.edge_norm;
    c.in_omega_s = c.tree_norm <= c.omega_s_bound;
    c.omega_s_margin = c.omega_s_bound - c.tree_norm;
    c.tree_edges = ops.tree_edges;
    return c;
}

bool in_cohesive_set(const OperatorSet& ops, const Vector& x, double gamma) {
    if (static_cast<std::size_t>(x.size()) != ops.node_count()) {
        throw Error(ErrorKind::DimensionMismatch, "x length does not match node count");
    }
    if (std::abs(x.sum()) > 1e-9) return false;
    const Vector diff = ops.incidence.transpose() * x;
    return diff.cwiseAbs().maxCoeff() <= gamma;
}

}  // namespace ksync
