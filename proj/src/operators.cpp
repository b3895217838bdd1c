#include "ksync/operators.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <string>

#include "ksync/errors.hpp"

namespace ksync {

namespace {

constexpr double kPinvCutoff = 1e-9;
constexpr double kCutsetRelTol = 1e-9;
constexpr double kCutsetAbsTol = 1e-12;

template <typename Vec>
bool cutset_check(const OperatorSet& ops, const Vec& x) {
    if (static_cast<std::size_t>(x.size()) != ops.edge_count()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "edge vector has length " + std::to_string(x.size()) + ", expected " +
                        std::to_string(ops.edge_count()));
    }
    const double scale = x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
    const Vec off = x - ops.projection * x;
    const double residual = off.size() == 0 ? 0.0 : off.cwiseAbs().maxCoeff();
    return residual <= std::max(kCutsetRelTol * scale, kCutsetAbsTol);
}

}  // namespace

Matrix incidence_matrix(const Network& net) {
    Matrix b = Matrix::Zero(static_cast<Eigen::Index>(net.node_count()),
                            static_cast<Eigen::Index>(net.edge_count()));
    for (std::size_t k = 0; k < net.edge_count(); ++k) {
        const auto& e = net.edges()[k];
        b(static_cast<Eigen::Index>(e.from), static_cast<Eigen::Index>(k)) = 1.0;
        b(static_cast<Eigen::Index>(e.to), static_cast<Eigen::Index>(k)) = -1.0;
    }
    return b;
}

SpanningTreeOperators spanning_tree_operators(const Network& net) {
    const std::size_t n = net.node_count();
    std::vector<std::vector<std::size_t>> incident(n);
    for (std::size_t k = 0; k < net.edge_count(); ++k) {
        incident[net.edges()[k].from].push_back(k);
        incident[net.edges()[k].to].push_back(k);
    }

    std::vector<bool> visited(n, false);
    std::vector<std::size_t> tree;
    std::deque<std::size_t> queue{0};
    visited[0] = true;
    while (!queue.empty()) {
        const auto v = queue.front();
        queue.pop_front();
        for (auto k : incident[v]) {
            const auto& e = net.edges()[k];
            const auto w = e.from == v ? e.to : e.from;
            if (!visited[w]) {
                visited[w] = true;
                tree.push_back(k);
                queue.push_back(w);
            }
        }
    }
    if (tree.size() + 1 != n) {
        throw Error(ErrorKind::DisconnectedGraph, "no spanning tree: graph is not connected");
    }
    std::sort(tree.begin(), tree.end());

    const Matrix b = incidence_matrix(net);
    Matrix bs(b.rows(), static_cast<Eigen::Index>(tree.size()));
    for (std::size_t c = 0; c < tree.size(); ++c) {
        bs.col(static_cast<Eigen::Index>(c)) = b.col(static_cast<Eigen::Index>(tree[c]));
    }
    // B_s has full column rank, so B_s^+ = (B_s^T B_s)^{-1} B_s^T.
    const Matrix gram = bs.transpose() * bs;
    const Matrix coords = gram.ldlt().solve(bs.transpose() * b);
    return {bs, coords.transpose(), std::move(tree)};
}

OperatorSet build_operators(const Network& net) {
    OperatorSet ops{.network = net};
    const auto n = static_cast<Eigen::Index>(net.node_count());
    const auto m = static_cast<Eigen::Index>(net.edge_count());

    ops.incidence = incidence_matrix(net);
    ops.weights.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) ops.weights(k) = net.edges()[static_cast<std::size_t>(k)].weight;

    ops.laplacian = ops.incidence * ops.weights.asDiagonal() * ops.incidence.transpose();

    Eigen::SelfAdjointEigenSolver<Matrix> eig(ops.laplacian);
    const Vector& lambda = eig.eigenvalues();
    const double cutoff = kPinvCutoff * lambda.cwiseAbs().maxCoeff();
    Vector inv = Vector::Zero(n);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (lambda(i) > cutoff) {
            inv(i) = 1.0 / lambda(i);
            ++rank;
        }
    }
    if (rank < n - 1) {
        throw Error(ErrorKind::DisconnectedGraph,
                    "Laplacian rank " + std::to_string(rank) + " < n - 1 = " + std::to_string(n - 1));
    }
    const Matrix& u = eig.eigenvectors();
    ops.laplacian_pinv = u * inv.asDiagonal() * u.transpose();
    ops.laplacian_pinv = 0.5 * (ops.laplacian_pinv + ops.laplacian_pinv.transpose()).eval();

    ops.edge_from_node = ops.incidence.transpose() * ops.laplacian_pinv;
    ops.node_from_edge = ops.laplacian_pinv * ops.incidence * ops.weights.asDiagonal();
    ops.projection = ops.edge_from_node * ops.incidence * ops.weights.asDiagonal();

    auto tree = spanning_tree_operators(net);
    ops.tree_incidence = std::move(tree.tree_incidence);
    ops.tree_sharp = std::move(tree.tree_sharp);
    ops.tree_edges = std::move(tree.tree_edges);

    // Both norms are >= 1 exactly; rounding can leave them a few ulps below.
    ops.norm_projection_inf = std::max(1.0, matrix_inf_norm(ops.projection));
    ops.norm_tree_sharp_inf = std::max(1.0, matrix_inf_norm(ops.tree_sharp));
    return ops;
}

ComplexMatrix weighted_laplacian(const Network& net, const ComplexVector& w) {
    if (static_cast<std::size_t>(w.size()) != net.edge_count()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "weight vector has length " + std::to_string(w.size()) + ", expected " +
                        std::to_string(net.edge_count()));
    }
    const auto n = static_cast<Eigen::Index>(net.node_count());
    ComplexMatrix l = ComplexMatrix::Zero(n, n);
    for (std::size_t k = 0; k < net.edge_count(); ++k) {
        const auto& e = net.edges()[k];
        const auto i = static_cast<Eigen::Index>(e.from);
        const auto j = static_cast<Eigen::Index>(e.to);
        const std::complex<double> c = e.weight * w(static_cast<Eigen::Index>(k));
        l(i, i) += c;
        l(j, j) += c;
        l(i, j) -= c;
        l(j, i) -= c;
    }
    return l;
}

ComplexMatrix complex_pinv(const ComplexMatrix& m, double rel_cutoff, std::size_t* rank, double abs_cutoff) {
    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    const double cutoff = std::max(abs_cutoff, sigma.size() == 0 ? 0.0 : rel_cutoff * sigma(0));
    Vector inv = Vector::Zero(sigma.size());
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff && sigma(i) > 0.0) {
            inv(i) = 1.0 / sigma(i);
            ++r;
        }
    }
    if (rank != nullptr) *rank = r;
    return svd.matrixV() * inv.cast<std::complex<double>>().asDiagonal() * svd.matrixU().adjoint();
}

std::size_t numerical_rank(const ComplexMatrix& m, double rel_cutoff) {
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    const auto& sigma = svd.singularValues();
    if (sigma.size() == 0 || sigma(0) == 0.0) return 0;
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > rel_cutoff * sigma(0)) ++r;
    }
    return r;
}

Vector project_balanced(const Vector& omega, const char* context) {
    if (omega.size() == 0) return omega;
    const double mean = omega.mean();
    if (std::abs(mean) > 1e-9) {
        std::ostringstream msg;
        msg << context << ": removed mean component " << mean << " from node vector";
        warn(msg.str());
    }
    return omega.array() - mean;
}

bool in_cutset_space(const OperatorSet& ops, const Vector& x) { return cutset_check(ops, x); }

bool in_cutset_space(const OperatorSet& ops, const ComplexVector& x) {
    if (static_cast<std::size_t>(x.size()) != ops.edge_count()) {
        throw Error(ErrorKind::DimensionMismatch, "edge vector length mismatch");
    }
    const ComplexVector off = x - ops.projection.cast<std::complex<double>>() * x;
    const double scale = x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
    const double residual = off.size() == 0 ? 0.0 : off.cwiseAbs().maxCoeff();
    return residual <= std::max(kCutsetRelTol * scale, kCutsetAbsTol);
}

}  // namespace ksync
