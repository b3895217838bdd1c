#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "ksync/case_io.hpp"
#include "ksync/certificate.hpp"
#include "ksync/errors.hpp"
#include "ksync/oracle.hpp"
#include "ksync/series.hpp"
#include "ksync/sweep.hpp"
#include "support/oracles.hpp"

using namespace ksync;
using namespace ksync::testing;

namespace {

using cd = std::complex<double>;

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no exception");
    return ErrorKind::IoError;
}

ComplexVector random_complex_cutset(const Network& net, std::mt19937_64& rng) {
    const auto n = static_cast<Eigen::Index>(net.node_count());
    const Vector re = random_vector(rng, n);
    const Vector im = random_vector(rng, n);
    ComplexVector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = {re(i), im(i)};
    return brute_incidence(net).cast<cd>().transpose() * x;
}

}  // namespace

TEST_CASE("kuramoto map", "[oracle]") {
    const auto ops = build_operators(single_edge());
    CHECK(kuramoto_map(ops, Vector::Zero(2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(kuramoto_map(ops, Vector{{std::numbers::pi / 4, -std::numbers::pi / 4}})(0) ==
          Catch::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("series inverts the kuramoto map", "[oracle][property]") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto net = random_network(3 + trial % 6, 0.6, 0.5, 5.0, 8000 + trial);
        const auto ops = build_operators(net);
        const double cap = gamma_star(ops.norm_projection_inf) - 0.05;
        // Stay well inside D^G so that order 8 already resolves the inverse.
        Vector x = centered(random_vector(rng, static_cast<Eigen::Index>(net.node_count())));
        x *= 0.5 * cap / (ops.incidence.transpose() * x).cwiseAbs().maxCoeff();
        const Vector target = ops.incidence.transpose() * x;
        const auto s = expand(ops, kuramoto_map(ops, x), 8);
        const double first = (s.partial_sum(0) - target).cwiseAbs().maxCoeff();
        double previous = std::numeric_limits<double>::infinity();
        for (int n = 0; n <= 8; n += 2) {
            const double err = (s.partial_sum(n) - target).cwiseAbs().maxCoeff();
            CHECK(err < previous);
            previous = err;
        }
        CHECK(previous <= 1e-2 * first);
    }
}

TEST_CASE("newton solver", "[oracle]") {
    SECTION("zero omega from zero") {
        const auto ops = build_operators(bowtie());
        const auto r = newton_solve(ops, Vector::Zero(5), Vector::Zero(5));
        CHECK(r.iterations == 0);
        CHECK(r.theta_star.cwiseAbs().maxCoeff() == 0.0);
        CHECK(r.stable);
    }
    SECTION("single edge gives arcsin") {
        const auto ops = build_operators(single_edge());
        for (double w : {-0.9, -0.3, 0.1, 0.5, 0.95}) {
            const auto r = newton_solve(ops, Vector{{w, -w}}, Vector::Zero(2));
            CHECK(std::abs(r.theta_star(0) - r.theta_star(1) - std::asin(w)) <= 1e-12);
            CHECK(std::abs(r.theta_star.sum()) <= 1e-10);
            CHECK(r.residual_inf <= 1e-10);
        }
    }
    SECTION("no solution past the fold") {
        const auto ops = build_operators(single_edge());
        const auto kind = kind_of([&] { newton_solve(ops, Vector{{1.2, -1.2}}, Vector::Zero(2)); });
        CHECK((kind == ErrorKind::NoConvergence || kind == ErrorKind::LeftDomain));
    }
    SECTION("start outside the cap") {
        const auto ops = build_operators(single_edge());
        CHECK(kind_of([&] { newton_solve(ops, Vector{{0.1, -0.1}}, Vector{{1.0, -1.0}}); }) ==
              ErrorKind::LeftDomain);
    }
    SECTION("case9 from S5 matches the error table") {
        const auto data = load_case_file(KSYNC_DATA_DIR "/case9.m");
        auto [net, omega] = to_kuramoto(data, 1.0);
        const auto ops = build_operators(net);
        const auto r = newton_solve(ops, omega, approximate_manifold(ops, omega, 2));
        CHECK(r.residual_inf <= 1e-10);
        CHECK(r.stable);
        const auto table = error_table(ops, omega, 2);
        const double e5 = (approximate_manifold(ops, omega, 2) - r.theta_star).cwiseAbs().maxCoeff();
        CHECK(table.rows[2].error == Catch::Approx(e5).margin(1e-10));
    }
}

TEST_CASE("simulation", "[oracle]") {
    SECTION("zero omega reaches consensus") {
        const auto ops = build_operators(bowtie());
        Vector theta0(5);
        theta0 << 0.1, -0.05, 0.02, 0.0, -0.07;
        const auto s = simulate(ops, Vector::Zero(5), theta0, {50.0, 0.01});
        CHECK(s.frequency_spread <= 1e-8);
        CHECK(s.max_edge_angle <= 1e-8);
    }
    SECTION("single edge settles at arcsin(0.5)") {
        const auto ops = build_operators(single_edge());
        const auto s = simulate(ops, Vector{{0.5, -0.5}}, Vector::Zero(2), {50.0, 0.01});
        CHECK(std::abs(s.final_theta(0) - s.final_theta(1) - std::asin(0.5)) <= 1e-6);
        CHECK(s.steps == 5000);
    }
    SECTION("perturbed equilibrium returns") {
        const auto net = bowtie();
        const auto ops = build_operators(net);
        Vector omega(5);
        omega << 0.8, -0.4, 0.3, -0.5, -0.2;
        const auto r = newton_solve(ops, omega, Vector::Zero(5));
        Vector kick(5);
        kick << 0.01, -0.01, 0.005, 0.0, -0.005;
        const auto s = simulate(ops, omega, r.theta_star + kick, {60.0, 0.01});
        CHECK((s.final_theta - r.theta_star).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(s.frequency_spread <= 1e-6);
    }
}

TEST_CASE("complex sinc", "[oracle]") {
    CHECK(sinc(cd(0.0)) == cd(1.0));
    CHECK(std::abs(sinc(cd(std::numbers::pi / 2)) - 2.0 / std::numbers::pi) <= 1e-15);
    CHECK(std::abs(sinc(cd(1e-9, 1e-9)) - 1.0) <= 1e-15);
    const cd z(0.7, -0.3);
    CHECK(std::abs(sinc(z) - std::sin(z) / z) <= 1e-15);
}

TEST_CASE("Q operator", "[oracle]") {
    SECTION("y = 0 leaves cutset vectors unchanged") {
        const auto net = bowtie();
        const auto ops = build_operators(net);
        std::mt19937_64 rng(1);
        const ComplexVector x = random_complex_cutset(net, rng);
        const ComplexVector y = ComplexVector::Zero(6);
        CHECK((q_operator_apply(ops, y, x) - x).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((q_operator_inverse_apply(ops, y, x) - x).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SECTION("single edge scalars") {
        const auto ops = build_operators(single_edge());
        const ComplexVector y{{cd(std::numbers::pi / 2)}};
        const ComplexVector x{{cd(0.3, 0.2)}};
        CHECK(std::abs(q_operator_apply(ops, y, x)(0) - 2.0 / std::numbers::pi * x(0)) <= 1e-15);
        const ComplexVector z{{cd(0.9, 0.4)}};
        CHECK(std::abs(q_operator_inverse_apply(ops, z, x)(0) - x(0) * z(0) / std::sin(z(0))) <= 1e-13);
    }
    SECTION("triangle round trip against a brute-force inverse") {
        const auto net = triangle(1.0, 2.0, 0.7);
        const auto ops = build_operators(net);
        std::mt19937_64 rng(2);
        for (int trial = 0; trial < 20; ++trial) {
            Vector zr = random_vector(rng, 3);
            zr *= 1.5 / zr.cwiseAbs().maxCoeff();
            const ComplexVector z = zr.cast<cd>();
            const ComplexVector v = random_complex_cutset(net, rng);
            const ComplexVector u = q_operator_inverse_apply(ops, z, v);
            CHECK((q_operator_apply(ops, z, u) - v).cwiseAbs().maxCoeff() <= 1e-9);

            const Eigen::MatrixXcd b = brute_incidence(net).cast<cd>();
            const Eigen::MatrixXcd a = brute_weights(net).cast<cd>().asDiagonal();
            ComplexVector s(3);
            for (int i = 0; i < 3; ++i) s(i) = sinc(z(i));
            const Eigen::MatrixXcd l = b * a * s.asDiagonal() * b.transpose();
            const ComplexVector expected = b.transpose() * brute_pinv(l) * b * a * v;
            CHECK((u - expected).cwiseAbs().maxCoeff() <= 1e-9);
        }
    }
    SECTION("errors") {
        const auto ops = build_operators(triangle());
        const ComplexVector bad{{cd(1.0), cd(0.0), cd(0.0)}};
        CHECK(kind_of([&] { q_operator_apply(ops, ComplexVector::Zero(3), bad); }) == ErrorKind::NotInCutsetSpace);
        CHECK(kind_of([&] { q_operator_inverse_apply(ops, ComplexVector::Zero(3), bad); }) ==
              ErrorKind::NotInCutsetSpace);
        // sinc(pi) = 0 on every edge kills the Laplacian.
        const ComplexVector dead = ComplexVector::Constant(3, cd(std::numbers::pi));
        const ComplexVector v = ComplexVector::Zero(3);
        CHECK(kind_of([&] { q_operator_inverse_apply(ops, dead, v); }) == ErrorKind::RankDeficient);
    }
}

TEST_CASE("Q operator identity on random graphs", "[oracle][property]") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = random_network(2 + trial % 7, 0.5, 0.2, 5.0, 9000 + trial);
        const auto ops = build_operators(net);
        const auto m = static_cast<Eigen::Index>(net.edge_count());
        ComplexVector z(m);
        const Vector re = random_vector(rng, m);
        const Vector im = random_vector(rng, m);
        for (Eigen::Index i = 0; i < m; ++i) z(i) = trial % 2 == 0 ? cd(re(i)) : cd(re(i), im(i));
        z *= std::numbers::pi / 2 / z.cwiseAbs().maxCoeff();
        CHECK(numerical_rank(weighted_laplacian(net, sinc(z))) == net.node_count() - 1);
        const ComplexVector v = random_complex_cutset(net, rng);
        CHECK((q_operator_apply(ops, z, q_operator_inverse_apply(ops, z, v)) - v).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("uniqueness, stability and flow balance", "[oracle][property]") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto net = random_network(4 + trial % 6, 0.5, 0.5, 5.0, 9500 + trial);
        const auto ops = build_operators(net);
        const auto n = static_cast<Eigen::Index>(net.node_count());
        Vector omega = centered(random_vector(rng, n));
        omega *= 0.5 / edge_injection(ops, omega).cwiseAbs().maxCoeff();
        const auto r = newton_solve(ops, omega, approximate_manifold(ops, omega, 2));
        const double gamma = std::max(r.max_edge_angle + 0.2, 1.2);
        REQUIRE(gamma < std::numbers::pi / 2);
        CHECK(r.stable);
        CHECK(is_stable_equilibrium(ops, r.theta_star));

        const Eigen::SelfAdjointEigenSolver<Matrix> eig(cosine_laplacian(ops, r.theta_star));
        const auto& lambda = eig.eigenvalues();
        CHECK(lambda.minCoeff() >= -1e-10);
        CHECK((lambda.array() < 1e-8 * lambda.maxCoeff()).count() == 1);

        const double c = matrix_inf_norm(ops.edge_from_node);
        const double flow = (edge_injection(ops, omega) - kuramoto_map(ops, r.theta_star)).cwiseAbs().maxCoeff();
        CHECK(flow <= 1e-10 * c);

        int agreed = 0;
        for (int start = 0; start < 20; ++start) {
            Vector x0 = centered(random_vector(rng, n));
            x0 *= gamma * std::uniform_real_distribution<double>(0.0, 1.0)(rng) /
                  (ops.incidence.transpose() * x0).cwiseAbs().maxCoeff();
            try {
                NewtonOptions options;
                options.gamma_cap = gamma;
                const auto other = newton_solve(ops, omega, x0, options);
                CHECK((other.theta_star - r.theta_star).cwiseAbs().maxCoeff() <= 1e-8);
                ++agreed;
            } catch (const Error&) {
            }
        }
        CHECK(agreed > 0);
    }
}
