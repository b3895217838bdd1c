#pragma once

#include <complex>
#include <numbers>

#include "ksync/operators.hpp"

namespace ksync {

/// f_K(x) = P sin(B^T x).
Vector kuramoto_map(const OperatorSet& ops, const Vector& x);

/// omega - B diag(a) sin(B^T theta), with omega taken as given.
Vector nodal_residual(const OperatorSet& ops, const Vector& omega, const Vector& theta);

/// B diag(a) diag(cos(B^T theta)) B^T, the negated Jacobian of the nodal residual.
Matrix cosine_laplacian(const OperatorSet& ops, const Vector& theta);

struct NewtonOptions {
    double gamma_cap = std::numbers::pi / 2 - 1e-6;
    double tol = 1e-10;
    int max_iter = 50;
    int max_halvings = 30;
    /// Extra full Newton steps taken after reaching `tol`, kept only while
    /// they reduce the residual.
    int polish_steps = 3;
};

struct EquilibriumResult {
    Vector theta_star;          // in 1^perp
    double residual_inf = 0.0;  // ||omega - B diag(a) sin(B^T theta*)||_inf
    int iterations = 0;         // Newton steps until the residual met tol
    double max_edge_angle = 0.0;  // ||B^T theta*||_inf
    bool stable = false;        // cosine Laplacian PSD with a single zero eigenvalue
};

/// Damped Newton on omega = B diag(a) sin(B^T theta) restricted to 1^perp.
/// Steps are halved when they leave ||B^T theta||_inf <= gamma_cap or fail to
/// reduce the residual. Throws NoConvergence after max_iter steps (or a
/// stalled line search) and LeftDomain when every halving leaves the domain.
EquilibriumResult newton_solve(const OperatorSet& ops, const Vector& omega, const Vector& x0,
                               const NewtonOptions& options = {});

/// True if the cosine Laplacian at theta has eigenvalues >= -1e-10 and exactly
/// one eigenvalue below 1e-8 * lambda_max.
bool is_stable_equilibrium(const OperatorSet& ops, const Vector& theta);

struct SimulationOptions {
    double t_end = 100.0;
    double dt = 0.01;
};

struct SimulationSummary {
    Vector final_theta;        // mean removed
    double frequency_spread = 0.0;  // max - min of theta_dot at t_end
    double max_edge_angle = 0.0;
    long steps = 0;
};

/// Fixed-step RK4 of theta_dot = omega - B diag(a) sin(B^T theta) in the
/// rotating frame (omega is centered first).
SimulationSummary simulate(const OperatorSet& ops, const Vector& omega, const Vector& theta0,
                           const SimulationOptions& options = {});

/// sin(z)/z, with sinc(0) = 1.
std::complex<double> sinc(std::complex<double> z);
ComplexVector sinc(const ComplexVector& z);

/// Q_y x = P diag(sinc(y)) x for x in Img(B^T). Throws NotInCutsetSpace.
ComplexVector q_operator_apply(const OperatorSet& ops, const ComplexVector& y,
                               const ComplexVector& x);

/// Q_z^{-1} v = B^T pinv(L_sinc(z)) B diag(a) v. Throws RankDeficient if
/// rank(L_sinc(z)) < n - 1, NotInCutsetSpace if v is outside Img(B^T).
ComplexVector q_operator_inverse_apply(const OperatorSet& ops, const ComplexVector& z,
                                       const ComplexVector& v);

}  // namespace ksync
