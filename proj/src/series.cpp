#include "ksync/series.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ksync/errors.hpp"

namespace ksync {

namespace {

void collect_partitions(int remaining_sum, int remaining_count, int max_part,
                        std::vector<int>& current, std::vector<OddPartition>& out) {
    if (remaining_count == 0) {
        if (remaining_sum == 0) out.push_back(OddPartition{current, 1.0});
        return;
    }
    // Every later part is at least 1.
    int top = std::min(max_part, remaining_sum - (remaining_count - 1));
    if (top % 2 == 0) --top;
    for (int part = top; part >= 1; part -= 2) {
        current.push_back(part);
        collect_partitions(remaining_sum - part, remaining_count - 1, part, current, out);
        current.pop_back();
    }
}

// Lazily built Hadamard powers of the already computed terms.
class PowerCache {
public:
    explicit PowerCache(const std::vector<Vector>& terms) : terms_(terms) {}

    const Vector& get(std::size_t term, int power) {
        if (cache_.size() <= term) cache_.resize(term + 1);
        auto& row = cache_[term];
        if (row.empty()) row.push_back(terms_[term]);  // power 1
        while (static_cast<int>(row.size()) < power) {
            row.push_back(row.back().cwiseProduct(terms_[term]));
        }
        return row[static_cast<std::size_t>(power - 1)];
    }

private:
    const std::vector<Vector>& terms_;
    std::vector<std::vector<Vector>> cache_;
};

}  // namespace

std::vector<std::pair<int, int>> OddPartition::grouped() const {
    std::vector<std::pair<int, int>> groups;
    for (int p : parts) {
        if (!groups.empty() && groups.back().first == p) {
            ++groups.back().second;
        } else {
            groups.emplace_back(p, 1);
        }
    }
    return groups;
}

double OddPartition::inverse_count_factorials() const {
    double value = 1.0;
    for (const auto& [part, count] : grouped()) {
        for (int t = 2; t <= count; ++t) value /= t;
    }
    return value;
}

std::vector<OddPartition> enumerate_odd_partitions(int j, int k) {
    if (k < 1 || k > j) {
        throw Error(ErrorKind::InvalidRange,
                    "need 1 <= k <= j, got j=" + std::to_string(j) + " k=" + std::to_string(k));
    }
    std::vector<OddPartition> out;
    std::vector<int> current;
    collect_partitions(2 * j + 1, 2 * k + 1, 2 * j + 1, current, out);
    for (auto& p : out) {
        // Running multinomial: stays integral after every step.
        double multiplicity = 1.0;
        int placed = 0;
        for (const auto& [part, count] : p.grouped()) {
            for (int t = 1; t <= count; ++t) {
                ++placed;
                multiplicity = multiplicity * placed / t;
            }
        }
        p.multiplicity = multiplicity;
    }
    return out;
}

Vector hadamard_power(const Vector& x, int p) {
    if (p < 0) throw Error(ErrorKind::InvalidRange, "negative Hadamard power");
    Vector result = Vector::Ones(x.size());
    for (int i = 0; i < p; ++i) result = result.cwiseProduct(x);
    return result;
}

Vector SeriesExpansion::partial_sum(int n) const {
    if (n < 0 || n > order) n = order;
    Vector sum = Vector::Zero(eta.size());
    for (int j = 0; j <= n; ++j) sum += terms[static_cast<std::size_t>(j)];
    return sum;
}

Vector SeriesExpansion::node_partial_sum(int n) const {
    if (n < 0 || n > order) n = order;
    Vector sum = Vector::Zero(node_terms.empty() ? 0 : node_terms.front().size());
    for (int j = 0; j <= n; ++j) sum += node_terms[static_cast<std::size_t>(j)];
    return sum;
}

SeriesExpansion expand(const OperatorSet& ops, const Vector& eta, int order) {
    if (order < 0) throw Error(ErrorKind::InvalidRange, "series order must be nonnegative");
    if (order > kMaxSeriesOrder) {
        throw Error(ErrorKind::OverflowGuard,
                    "series order " + std::to_string(order) + " exceeds " +
                        std::to_string(kMaxSeriesOrder));
    }
    if (!in_cutset_space(ops, eta)) {
        throw Error(ErrorKind::NotInCutsetSpace, "eta is not in the image of B^T");
    }

    SeriesExpansion s;
    s.eta = eta;
    s.order = order;
    s.terms.reserve(static_cast<std::size_t>(order) + 1);
    s.terms.push_back(eta);

    PowerCache powers(s.terms);
    for (int j = 1; j <= order; ++j) {
        Vector acc = Vector::Zero(eta.size());
        for (int k = 1; k <= j; ++k) {
            const double sign = (k % 2 == 1) ? 1.0 : -1.0;
            for (const auto& partition : enumerate_odd_partitions(j, k)) {
                // multiplicity / (2k+1)! = 1 / prod (count!)
                Vector product = Vector::Ones(eta.size());
                for (const auto& [part, count] : partition.grouped()) {
                    product = product.cwiseProduct(
                        powers.get(static_cast<std::size_t>((part - 1) / 2), count));
                }
                acc += (sign * partition.inverse_count_factorials()) * product;
            }
        }
        s.terms.push_back(ops.projection * acc);
    }

    s.node_terms.reserve(s.terms.size());
    for (const auto& t : s.terms) s.node_terms.push_back(ops.node_from_edge * t);
    return s;
}

Vector edge_injection(const OperatorSet& ops, const Vector& omega) {
    if (static_cast<std::size_t>(omega.size()) != ops.node_count()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "node vector has length " + std::to_string(omega.size()) + ", expected " +
                        std::to_string(ops.node_count()));
    }
    return ops.edge_from_node * project_balanced(omega, "edge_injection");
}

Vector approximate_manifold(const OperatorSet& ops, const Vector& omega, int n) {
    const auto s = expand(ops, edge_injection(ops, omega), n);
    Vector x = s.node_partial_sum();
    return x.array() - x.mean();
}

TestVerdict approximate_test(const OperatorSet& ops, const Vector& omega, int n, double gamma) {
    if (!(gamma >= 0.0 && gamma < std::numbers::pi / 2)) {
        throw Error(ErrorKind::DomainError, "gamma must lie in [0, pi/2)");
    }
    const auto s = expand(ops, edge_injection(ops, omega), n);
    const Vector sum = s.partial_sum();
    const double norm = sum.size() == 0 ? 0.0 : sum.cwiseAbs().maxCoeff();
    return {norm <= gamma, gamma - norm, norm};
}

}  // namespace ksync
