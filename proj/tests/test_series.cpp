#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "ksync/case_io.hpp"
#include "ksync/errors.hpp"
#include "ksync/oracle.hpp"
#include "ksync/series.hpp"
#include "support/oracles.hpp"

using namespace ksync;
using namespace ksync::testing;

namespace {

bool has_kind(const std::function<void()>& f, ErrorKind kind) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind() == kind;
    }
    return false;
}

Vector two_node_omega(double w) {
    Vector omega(2);
    omega << w, -w;
    return omega;
}

}  // namespace

TEST_CASE("odd partitions match the hand-expanded low orders", "[series_engine]") {
    using Parts = std::vector<int>;
    auto p11 = enumerate_odd_partitions(1, 1);
    REQUIRE(p11.size() == 1);
    CHECK(p11[0].parts == Parts{1, 1, 1});
    CHECK(p11[0].multiplicity == 1.0);

    auto p21 = enumerate_odd_partitions(2, 1);
    REQUIRE(p21.size() == 1);
    CHECK(p21[0].parts == Parts{3, 1, 1});
    CHECK(p21[0].multiplicity == 3.0);

    auto p32 = enumerate_odd_partitions(3, 2);
    REQUIRE(p32.size() == 1);
    CHECK(p32[0].parts == Parts{3, 1, 1, 1, 1});
    CHECK(p32[0].multiplicity == 5.0);

    auto p31 = enumerate_odd_partitions(3, 1);
    REQUIRE(p31.size() == 2);
    CHECK(p31[0].parts == Parts{5, 1, 1});
    CHECK(p31[0].multiplicity == 3.0);
    CHECK(p31[1].parts == Parts{3, 3, 1});
    CHECK(p31[1].multiplicity == 3.0);

    CHECK(has_kind([] { enumerate_odd_partitions(2, 0); }, ErrorKind::InvalidRange));
    CHECK(has_kind([] { enumerate_odd_partitions(2, 3); }, ErrorKind::InvalidRange));
}

TEST_CASE("partition multiplicities count ordered tuples", "[series_engine][property]") {
    for (int j = 1; j <= 10; ++j) {
        for (int k = 1; k <= j; ++k) {
            const auto partitions = enumerate_odd_partitions(j, k);
            double total = 0.0;
            for (const auto& p : partitions) {
                CHECK(static_cast<int>(p.parts.size()) == 2 * k + 1);
                int sum = 0;
                for (std::size_t i = 0; i < p.parts.size(); ++i) {
                    CHECK(p.parts[i] % 2 == 1);
                    if (i > 0) CHECK(p.parts[i] <= p.parts[i - 1]);
                    sum += p.parts[i];
                }
                CHECK(sum == 2 * j + 1);
                double factorial = 1.0;
                for (int t = 2; t <= 2 * k + 1; ++t) factorial *= t;
                CHECK(p.inverse_count_factorials() * factorial == Catch::Approx(p.multiplicity));
                total += p.multiplicity;
            }
            for (std::size_t i = 1; i < partitions.size(); ++i) {
                CHECK(partitions[i].parts < partitions[i - 1].parts);
            }
            INFO("j=" << j << " k=" << k);
            CHECK(total == static_cast<double>(count_ordered_odd_tuples(2 * j + 1, 2 * k + 1)));
        }
    }
}

TEST_CASE("hadamard power", "[series_engine]") {
    Vector x(2);
    x << 2.0, -1.0;
    CHECK(hadamard_power(x, 3) == Vector{{8.0, -1.0}});
    CHECK(hadamard_power(x, 1) == x);
    CHECK(hadamard_power(x, 0) == Vector::Ones(2));
    CHECK(hadamard_power(Vector{{0.5}}, 5)(0) == 0.03125);
}

TEST_CASE("single edge reproduces the arcsin series", "[series_engine]") {
    const auto ops = build_operators(single_edge());
    const auto s = expand(ops, Vector{{0.5}}, 2);
    REQUIRE(s.terms.size() == 3);
    CHECK(s.terms[0](0) == 0.5);
    CHECK(s.terms[1](0) == Catch::Approx(0.125 / 6.0).epsilon(1e-14));
    CHECK(s.terms[2](0) == Catch::Approx(3.0 * 0.03125 / 40.0).epsilon(1e-14));
    CHECK(s.partial_sum()(0) == Catch::Approx(arcsin_maclaurin(0.5, 2)).epsilon(1e-14));

    const auto long_series = expand(ops, Vector{{0.5}}, 30);
    CHECK(long_series.partial_sum()(0) == Catch::Approx(std::asin(0.5)).epsilon(1e-12));
}

TEST_CASE("arcsin equivalence on random two-node inputs", "[series_engine][property]") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ratio(-0.9, 0.9);
    std::uniform_real_distribution<double> weight(0.1, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = weight(rng);
        const double t = ratio(rng);
        const auto ops = build_operators(single_edge(a));
        const auto s = expand(ops, Vector{{t}}, 6);
        for (int n = 0; n <= 6; ++n) {
            CHECK(std::abs(s.partial_sum(n)(0) - arcsin_maclaurin(t, n)) <= 1e-12);
        }
    }
}

TEST_CASE("zero eta gives zero terms", "[series_engine]") {
    const auto ops = build_operators(bowtie());
    const auto s = expand(ops, Vector::Zero(6), 4);
    for (const auto& t : s.terms) CHECK(t.cwiseAbs().maxCoeff() == 0.0);
    for (const auto& t : s.node_terms) CHECK(t.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("low-order terms match the closed forms", "[series_engine][property]") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = trial < 10 ? triangle(1.0, 2.0, 0.5)
                                    : random_network(3 + trial % 8, 0.5, 0.1, 10.0, 3000 + trial);
        const auto ops = build_operators(net);
        const Vector eta = random_cutset_vector(net, rng, 0.6);
        const auto s = expand(ops, eta, 3);
        const auto closed = remark_terms(brute_projection(net), eta);
        INFO("trial " << trial);
        CHECK((s.terms[1] - closed.a3).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((s.terms[2] - closed.a5).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((s.terms[3] - closed.a7).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("inverse-map residual shrinks at the expected rate", "[series_engine][property]") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const auto net = random_network(4 + trial % 7, 0.5, 0.5, 5.0, 4000 + trial);
        const auto ops = build_operators(net);
        const Vector direction = random_cutset_vector(net, rng, 1.0);
        for (int order = 0; order <= 2; ++order) {
            std::vector<double> xs, ys;
            for (double scale : {0.3, 0.2, 0.14, 0.1, 0.07}) {
                const Vector eta = direction * scale;
                const Vector sum = expand(ops, eta, order + 1).partial_sum(order);
                const Vector next = expand(ops, eta, order + 1).partial_sum(order + 1);
                const double r = (ops.projection * sum.array().sin().matrix() - eta).cwiseAbs().maxCoeff();
                const double r_next = (ops.projection * next.array().sin().matrix() - eta).cwiseAbs().maxCoeff();
                CHECK(r_next <= r);
                xs.push_back(std::log(scale));
                ys.push_back(std::log(r));
            }
            const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
            const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
            double sxy = 0.0, sxx = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                sxy += (xs[i] - mx) * (ys[i] - my);
                sxx += (xs[i] - mx) * (xs[i] - mx);
            }
            INFO("trial " << trial << " order " << order);
            CHECK(std::abs(sxy / sxx - (2 * order + 3)) <= 0.5);
        }
    }
}

TEST_CASE("series terms live in the cutset space", "[series_engine][property]") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        const auto net = random_network(3 + trial % 8, 0.5, 0.1, 10.0, 1000 + trial);
        const auto ops = build_operators(net);
        const Vector eta = random_cutset_vector(net, rng, 0.4);
        const auto s = expand(ops, eta, 6);
        CHECK(s.terms[0] == eta);
        const auto m = static_cast<Eigen::Index>(net.edge_count());
        const Matrix complement = Matrix::Identity(m, m) - ops.projection;
        for (std::size_t j = 0; j < s.terms.size(); ++j) {
            const double scale = s.terms[j].cwiseAbs().maxCoeff();
            CHECK((complement * s.terms[j]).cwiseAbs().maxCoeff() <= 1e-10 * scale + 1e-300);
            CHECK(std::abs(s.node_terms[j].sum()) <= 1e-10);
            CHECK((ops.incidence.transpose() * s.node_terms[j] - s.terms[j]).cwiseAbs().maxCoeff() <= 1e-9);
        }
    }
}

TEST_CASE("inverse-map residual is odd in eta", "[series_engine][property]") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto net = random_network(4 + trial % 6, 0.6, 0.5, 5.0, 77 + trial);
        const auto ops = build_operators(net);
        const Vector eta = random_cutset_vector(net, rng, 0.3);
        for (int n = 0; n <= 3; ++n) {
            const Vector plus = ops.projection * expand(ops, eta, n).partial_sum().array().sin().matrix() - eta;
            const Vector minus = ops.projection * expand(ops, (-eta).eval(), n).partial_sum().array().sin().matrix() + eta;
            CHECK((plus + minus).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("expand rejects bad input", "[series_engine]") {
    const auto ops = build_operators(triangle());
    CHECK(has_kind([&] { expand(ops, Vector{{1.0, 0.0, 0.0}}, 2); }, ErrorKind::NotInCutsetSpace));
    CHECK(has_kind([&] { expand(ops, Vector::Zero(3), 51); }, ErrorKind::OverflowGuard));
    CHECK(has_kind([&] { expand(ops, Vector::Zero(2), 2); }, ErrorKind::DimensionMismatch));
    CHECK_NOTHROW(expand(ops, Vector::Zero(3), 50));
}

TEST_CASE("approximate manifold", "[series_engine]") {
    SECTION("zero omega") {
        const auto ops = build_operators(bowtie());
        for (int n = 0; n <= 4; ++n) CHECK(approximate_manifold(ops, Vector::Zero(5), n).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("two nodes: edge difference is the truncated arcsin") {
        const double a = 2.0;
        const double w = 0.9;
        const auto ops = build_operators(single_edge(a));
        for (int n = 0; n <= 5; ++n) {
            const Vector s = approximate_manifold(ops, two_node_omega(w), n);
            CHECK(std::abs(s.sum()) <= 1e-14);
            CHECK(s(0) - s(1) == Catch::Approx(arcsin_maclaurin(w / a, n)).epsilon(1e-13));
        }
        const Vector s = approximate_manifold(ops, two_node_omega(w), 40);
        CHECK(s(0) - s(1) == Catch::Approx(std::asin(w / a)).epsilon(1e-12));
    }
    SECTION("case9 error shrinks with order") {
        const auto data = load_case_file(KSYNC_DATA_DIR "/case9.m");
        auto [net, omega1] = to_kuramoto(data, 1.0);
        const auto ops = build_operators(net);
        const double eta1 = (ops.edge_from_node * omega1).cwiseAbs().maxCoeff();
        const Vector omega = omega1 * (0.5 / eta1);
        const auto theta = newton_solve(ops, omega, approximate_manifold(ops, omega, 0)).theta_star;
        double previous = std::numeric_limits<double>::infinity();
        for (int n = 0; n <= 2; ++n) {
            const double err = (approximate_manifold(ops, omega, n) - theta).cwiseAbs().maxCoeff();
            CHECK(err < previous);
            previous = err;
        }
    }
}

TEST_CASE("approximate test", "[series_engine]") {
    const auto ops = build_operators(single_edge());
    SECTION("zero omega passes with margin gamma") {
        const auto v = approximate_test(build_operators(bowtie()), Vector::Zero(5), 2, 0.3);
        CHECK(v.pass);
        CHECK(v.margin == 0.3);
    }
    SECTION("first order is the linear test") {
        const double gamma = std::numbers::pi / 4;
        CHECK(approximate_test(ops, two_node_omega(0.78), 0, gamma).pass);
        CHECK_FALSE(approximate_test(ops, two_node_omega(0.79), 0, gamma).pass);
    }
    SECTION("T5 at w = 0.7") {
        const auto v = approximate_test(ops, two_node_omega(0.7), 2, std::numbers::pi / 4);
        const double partial = 0.7 + std::pow(0.7, 3) / 6.0 + 3.0 * std::pow(0.7, 5) / 40.0;
        CHECK(v.pass);
        CHECK(v.norm == Catch::Approx(partial).epsilon(1e-14));
        CHECK(v.margin == Catch::Approx(std::numbers::pi / 4 - partial).epsilon(1e-12));
        CHECK(v.margin == Catch::Approx(0.0156).margin(1e-4));
        CHECK(std::asin(0.7) <= std::numbers::pi / 4);
    }
    SECTION("gamma outside [0, pi/2)") {
        CHECK(has_kind([&] { approximate_test(ops, two_node_omega(0.1), 2, std::numbers::pi / 2); },
                       ErrorKind::DomainError));
        CHECK(has_kind([&] { approximate_test(ops, two_node_omega(0.1), 2, -0.1); }, ErrorKind::DomainError));
    }
}

TEST_CASE("unbalanced omega is centred with a warning", "[series_engine]") {
    const auto ops = build_operators(single_edge());
    std::vector<std::string> messages;
    auto previous = set_warning_handler([&](std::string_view m) { messages.emplace_back(m); });
    const Vector s = approximate_manifold(ops, Vector{{1.0, 0.0}}, 1);
    set_warning_handler(previous);
    CHECK(messages.size() == 1);
    CHECK(s(0) - s(1) == Catch::Approx(arcsin_maclaurin(0.5, 1)));
}
