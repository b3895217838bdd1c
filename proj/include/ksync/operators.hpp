#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "ksync/network.hpp"

namespace ksync {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Graph-derived linear operators. Built once by `build_operators` and not
/// modified afterwards, so one instance can be shared across analyses.
struct OperatorSet {
    Network network;
    Matrix incidence;        // B, n x m
    Vector weights;          // diagonal of the edge weight matrix
    Matrix laplacian;        // L = B diag(a) B^T
    Matrix laplacian_pinv;   // L^+
    Matrix projection;       // P = B^T L^+ B diag(a), cutset projection
    Matrix tree_incidence;   // B_s, n x (n-1)
    Matrix tree_sharp;       // B#_s = (B_s^+ B)^T, m x (n-1)
    std::vector<std::size_t> tree_edges;  // indices into network.edges(), ascending
    double norm_projection_inf = 0.0;
    double norm_tree_sharp_inf = 0.0;

    Matrix edge_from_node;   // B^T L^+, m x n (maps omega to eta)
    Matrix node_from_edge;   // L^+ B diag(a), n x m

    std::size_t node_count() const noexcept { return network.node_count(); }
    std::size_t edge_count() const noexcept { return network.edge_count(); }

    Matrix weight_matrix() const { return weights.asDiagonal(); }
};

/// Incidence, Laplacian, pseudoinverse, cutset projection and spanning-tree
/// operators. The pseudoinverse comes from a symmetric eigendecomposition
/// with eigenvalue cutoff 1e-9 * lambda_max; the spanning tree is a BFS from
/// node 0 scanning incident edges by input index.
/// Throws DisconnectedGraph if rank(L) < n - 1.
OperatorSet build_operators(const Network& net);

/// Incidence matrix with column k = e_from - e_to for edge k.
Matrix incidence_matrix(const Network& net);

/// B diag(a) diag(w) B^T over complex scalars.
ComplexMatrix weighted_laplacian(const Network& net, const ComplexVector& w);

/// max_i sum_j |m_ij|; zero for an empty matrix.
template <typename Derived>
double matrix_inf_norm(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    return m.cwiseAbs().rowwise().sum().maxCoeff();
}

struct SpanningTreeOperators {
    Matrix tree_incidence;
    Matrix tree_sharp;
    std::vector<std::size_t> tree_edges;
};

SpanningTreeOperators spanning_tree_operators(const Network& net);

/// Moore-Penrose pseudoinverse via SVD. Singular values at or below
/// max(rel_cutoff * sigma_max, abs_cutoff) are dropped; `rank` receives the
/// number kept.
ComplexMatrix complex_pinv(const ComplexMatrix& m, double rel_cutoff, std::size_t* rank = nullptr,
                           double abs_cutoff = 0.0);

/// Number of singular values above `rel_cutoff * sigma_max`.
std::size_t numerical_rank(const ComplexMatrix& m, double rel_cutoff = 1e-9);

/// Removes the mean of `omega`. Warns through `warn` when the removed
/// component exceeds 1e-9 in magnitude.
Vector project_balanced(const Vector& omega, const char* context);

/// ||(I - P) x||_inf within 1e-9 relative to ||x||_inf (absolute 1e-12 near zero).
bool in_cutset_space(const OperatorSet& ops, const Vector& x);
bool in_cutset_space(const OperatorSet& ops, const ComplexVector& x);

}  // namespace ksync
