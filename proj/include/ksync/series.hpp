#pragma once

#include <cstddef>
#include <vector>

#include "ksync/operators.hpp"

namespace ksync {

/// Multiset of 2k+1 odd positive parts summing to 2j+1, stored in
/// non-increasing order.
struct OddPartition {
    std::vector<int> parts;
    /// Number of distinct orderings, (2k+1)! / prod_v (count of v)!.
    /// Stored as double; exact while below 2^53.
    double multiplicity = 1.0;

    /// (value, count) pairs in non-increasing value order.
    std::vector<std::pair<int, int>> grouped() const;

    /// 1 / prod_v (count of v)!, i.e. multiplicity / (2k+1)!.
    double inverse_count_factorials() const;
};

/// All partitions of 2j+1 into 2k+1 odd parts, lexicographically decreasing.
/// Throws InvalidRange unless 1 <= k <= j.
std::vector<OddPartition> enumerate_odd_partitions(int j, int k);

/// Elementwise power; p = 0 gives the all-ones vector.
Vector hadamard_power(const Vector& x, int p);

inline constexpr int kMaxSeriesOrder = 50;
inline constexpr int kDefaultSeriesOrder = 2;

/// Evaluated Taylor terms of the inverse Kuramoto map at a fixed eta.
struct SeriesExpansion {
    Vector eta;
    int order = 0;                    // highest term index is 2*order+1
    std::vector<Vector> terms;        // A_1, A_3, ..., A_{2 order + 1} (edge space)
    std::vector<Vector> node_terms;   // L^+ B diag(a) A_{2j+1} (node space)

    /// sum_{j <= n} A_{2j+1}; n defaults to `order`.
    Vector partial_sum(int n = -1) const;
    Vector node_partial_sum(int n = -1) const;
};

/// Evaluates A_1 = eta and, for j = 1..order,
///   A_{2j+1} = P( sum_k (-1)^{k+1}/(2k+1)! sum_{alpha} A_alpha ),
/// with alpha ranging over ordered (2k+1)-tuples of odd indices summing to
/// 2j+1 (enumerated as multisets weighted by multiplicity).
/// Throws NotInCutsetSpace if eta is not in Img(B^T), OverflowGuard if
/// order > 50, InvalidRange if order < 0.
SeriesExpansion expand(const OperatorSet& ops, const Vector& eta, int order = kDefaultSeriesOrder);

/// eta = B^T L^+ omega, after removing the mean of omega.
Vector edge_injection(const OperatorSet& ops, const Vector& omega);

/// S_{2n+1} = L^+ B diag(a) sum_{j=0}^{n} A_{2j+1}(B^T L^+ omega).
Vector approximate_manifold(const OperatorSet& ops, const Vector& omega, int n = kDefaultSeriesOrder);

struct TestVerdict {
    bool pass = false;
    double margin = 0.0;  // gamma - ||partial sum||_inf
    double norm = 0.0;    // ||partial sum||_inf
};

/// T_{2n+1}: ||sum_{j=0}^{n} A_{2j+1}(B^T L^+ omega)||_inf <= gamma.
/// Throws DomainError unless 0 <= gamma < pi/2.
TestVerdict approximate_test(const OperatorSet& ops, const Vector& omega, int n, double gamma);

}  // namespace ksync
