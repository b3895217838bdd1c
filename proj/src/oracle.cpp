#include "ksync/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ksync/errors.hpp"

namespace ksync {

namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void check_nodes(const OperatorSet& ops, const Vector& v, const char* what) {
    if (static_cast<std::size_t>(v.size()) != ops.node_count()) {
        throw Error(ErrorKind::DimensionMismatch,
                    std::string(what) + " has length " + std::to_string(v.size()) + ", expected " +
                        std::to_string(ops.node_count()));
    }
}

Vector centered(const Vector& v) { return v.array() - v.mean(); }

// Newton direction in 1^perp: (L_cos + 11^T/n) d = F. The rank-one term
// removes the rotational null space; d is orthogonal to 1 whenever F is.
Vector newton_direction(const OperatorSet& ops, const Vector& theta, const Vector& residual) {
    Matrix jac = cosine_laplacian(ops, theta);
    const double n = static_cast<double>(ops.node_count());
    jac.array() += 1.0 / n;
    return jac.partialPivLu().solve(residual);
}

}  // namespace

Vector kuramoto_map(const OperatorSet& ops, const Vector& x) {
    check_nodes(ops, x, "x");
    const Vector angles = ops.incidence.transpose() * x;
    return ops.projection * angles.array().sin().matrix();
}

Vector nodal_residual(const OperatorSet& ops, const Vector& omega, const Vector& theta) {
    const Vector angles = ops.incidence.transpose() * theta;
    return omega - ops.incidence * (ops.weights.array() * angles.array().sin()).matrix();
}

Matrix cosine_laplacian(const OperatorSet& ops, const Vector& theta) {
    const Vector angles = ops.incidence.transpose() * theta;
    const Vector w = ops.weights.array() * angles.array().cos();
    return ops.incidence * w.asDiagonal() * ops.incidence.transpose();
}

bool is_stable_equilibrium(const OperatorSet& ops, const Vector& theta) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cosine_laplacian(ops, theta),
                                              Eigen::EigenvaluesOnly);
    const Vector& lambda = eig.eigenvalues();
    const double lambda_max = lambda.maxCoeff();
    if (!(lambda_max > 0.0)) return false;
    if (lambda.minCoeff() < -1e-10 * std::max(1.0, lambda_max)) return false;
    const auto small = (lambda.array() < 1e-8 * lambda_max).count();
    return small == 1;
}

EquilibriumResult newton_solve(const OperatorSet& ops, const Vector& omega, const Vector& x0,
                               const NewtonOptions& options) {
    check_nodes(ops, omega, "omega");
    check_nodes(ops, x0, "x0");
    const Vector w = project_balanced(omega, "newton_solve(omega)");
    Vector theta = project_balanced(x0, "newton_solve(x0)");

    auto edge_angle = [&](const Vector& t) { return inf_norm(ops.incidence.transpose() * t); };
    if (edge_angle(theta) > options.gamma_cap) {
        throw Error(ErrorKind::LeftDomain, "initial guess lies outside the angle cap");
    }

    Vector residual = nodal_residual(ops, w, theta);
    double r = inf_norm(residual);
    int iterations = 0;
    while (r > options.tol) {
        if (iterations >= options.max_iter) {
            throw Error(ErrorKind::NoConvergence,
                        "Newton did not converge in " + std::to_string(options.max_iter) +
                            " iterations (residual " + std::to_string(r) + ")");
        }
        const Vector step = newton_direction(ops, theta, residual);
        if (!step.allFinite()) {
            throw Error(ErrorKind::NoConvergence, "singular Newton system");
        }
        double t = 1.0;
        bool accepted = false;
        bool inside_once = false;
        for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
            Vector trial = centered(theta + t * step);
            if (edge_angle(trial) > options.gamma_cap) continue;
            inside_once = true;
            Vector trial_residual = nodal_residual(ops, w, trial);
            const double r_trial = inf_norm(trial_residual);
            if (r_trial < r) {
                theta = std::move(trial);
                residual = std::move(trial_residual);
                r = r_trial;
                accepted = true;
                break;
            }
        }
        ++iterations;
        if (!accepted) {
            if (!inside_once) {
                throw Error(ErrorKind::LeftDomain,
                            "Newton iterate left ||B^T theta||_inf <= gamma_cap after " +
                                std::to_string(options.max_halvings) + " halvings");
            }
            throw Error(ErrorKind::NoConvergence,
                        "line search stalled at residual " + std::to_string(r));
        }
    }

    for (int p = 0; p < options.polish_steps && r > 0.0; ++p) {
        const Vector step = newton_direction(ops, theta, residual);
        if (!step.allFinite()) break;
        Vector trial = centered(theta + step);
        if (edge_angle(trial) > options.gamma_cap) break;
        Vector trial_residual = nodal_residual(ops, w, trial);
        const double r_trial = inf_norm(trial_residual);
        if (!(r_trial < r)) break;
        theta = std::move(trial);
        residual = std::move(trial_residual);
        r = r_trial;
    }

    EquilibriumResult result;
    result.max_edge_angle = edge_angle(theta);
    result.theta_star = std::move(theta);
    result.residual_inf = r;
    result.iterations = iterations;
    result.stable = is_stable_equilibrium(ops, result.theta_star);
    return result;
}

SimulationSummary simulate(const OperatorSet& ops, const Vector& omega, const Vector& theta0,
                           const SimulationOptions& options) {
    check_nodes(ops, omega, "omega");
    check_nodes(ops, theta0, "theta0");
    if (!(options.dt > 0.0)) throw Error(ErrorKind::DomainError, "dt must be positive");
    if (!(options.t_end >= 0.0)) throw Error(ErrorKind::DomainError, "t_end must be nonnegative");

    const Vector w = centered(omega);
    auto rhs = [&](const Vector& th) -> Vector { return nodal_residual(ops, w, th); };

    // Whole number of equal steps; h equals dt whenever dt divides t_end.
    const long steps = options.t_end == 0.0 ? 0 : static_cast<long>(std::ceil(options.t_end / options.dt - 1e-9));
    const double h = steps == 0 ? 0.0 : options.t_end / static_cast<double>(steps);
    Vector theta = theta0;
    for (long i = 0; i < steps; ++i) {
        const Vector k1 = rhs(theta);
        const Vector k2 = rhs(theta + 0.5 * h * k1);
        const Vector k3 = rhs(theta + 0.5 * h * k2);
        const Vector k4 = rhs(theta + h * k3);
        theta += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    SimulationSummary summary;
    const Vector rate = rhs(theta);
    summary.frequency_spread = rate.size() == 0 ? 0.0 : rate.maxCoeff() - rate.minCoeff();
    summary.final_theta = centered(theta);
    summary.max_edge_angle = inf_norm(ops.incidence.transpose() * summary.final_theta);
    summary.steps = steps;
    return summary;
}

std::complex<double> sinc(std::complex<double> z) {
    if (z == std::complex<double>(0.0, 0.0)) return {1.0, 0.0};
    return std::sin(z) / z;
}

ComplexVector sinc(const ComplexVector& z) {
    ComplexVector out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) out(i) = sinc(z(i));
    return out;
}

ComplexVector q_operator_apply(const OperatorSet& ops, const ComplexVector& y,
                               const ComplexVector& x) {
    if (static_cast<std::size_t>(y.size()) != ops.edge_count()) {
        throw Error(ErrorKind::DimensionMismatch, "y length does not match edge count");
    }
    if (!in_cutset_space(ops, x)) {
        throw Error(ErrorKind::NotInCutsetSpace, "x is not in the complex image of B^T");
    }
    const ComplexVector scaled = sinc(y).cwiseProduct(x);
    return ops.projection.cast<std::complex<double>>() * scaled;
}

ComplexVector q_operator_inverse_apply(const OperatorSet& ops, const ComplexVector& z,
                                       const ComplexVector& v) {
    if (static_cast<std::size_t>(z.size()) != ops.edge_count()) {
        throw Error(ErrorKind::DimensionMismatch, "z length does not match edge count");
    }
    if (!in_cutset_space(ops, v)) {
        throw Error(ErrorKind::NotInCutsetSpace, "v is not in the complex image of B^T");
    }
    const ComplexMatrix l_sinc = weighted_laplacian(ops.network, sinc(z));
    std::size_t rank = 0;
    // Singular values are judged against the real Laplacian's scale so that a
    // uniformly collapsed L_sinc still counts as rank deficient.
    const ComplexMatrix l_pinv = complex_pinv(l_sinc, 1e-9, &rank, 1e-9 * matrix_inf_norm(ops.laplacian));
    if (rank + 1 < ops.node_count()) {
        throw Error(ErrorKind::RankDeficient,
                    "rank(L_sinc(z)) = " + std::to_string(rank) + " < n - 1");
    }
    const ComplexMatrix b = ops.incidence.cast<std::complex<double>>();
    const ComplexVector weighted = ops.weights.cast<std::complex<double>>().cwiseProduct(v);
    return b.transpose() * (l_pinv * (b * weighted));
}

}  // namespace ksync
