#include "doctest.h"

#include "qpg/errors.hpp"
#include "qpg/oracle.hpp"

#include <cmath>
#include <random>

using namespace qpg;

namespace {
PotentialSpec mathieu(double a, double tau = 0) {
    auto basis = std::make_shared<GeneratorBasis>(std::vector<std::string>{"1"});
    return PotentialSpec::from_coefficients(basis, standard_theta0(1),
                                            {{Freq::unit(0), Cplx<quad>(quad(a))}, {Freq::zero(), Cplx<quad>(quad(tau))}});
}
}  // namespace

TEST_CASE("Jacobi on a 2x2 Hermitian matrix") {
    HermitianMatrix<double> A(2);
    A(0, 0) = 2;
    A(1, 1) = -1;
    A(0, 1) = Cplx<double>(1, 2);
    A(1, 0) = A(0, 1).conj();
    const auto r = jacobi_eigen(A, true);
    const double m = 0.5, d = std::sqrt(1.5 * 1.5 + 5);
    CHECK(r.values[0] == doctest::Approx(m - d));
    CHECK(r.values[1] == doctest::Approx(m + d));
    // A v = lambda v
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i) {
            Cplx<double> s;
            for (int j = 0; j < 2; ++j) s += A(i, j) * r.vec(j, k);
            CHECK(abs(s - r.vec(i, k) * r.values[k]) < 1e-14);
        }
}

TEST_CASE("Jacobi on the 3x3 second-difference matrix") {
    HermitianMatrix<quad> A(3);
    for (int i = 0; i < 3; ++i) A(i, i) = quad(2);
    for (int i = 0; i < 2; ++i) A(i, i + 1) = A(i + 1, i) = quad(-1);
    const auto r = jacobi_eigen(A, false);
    const quad s = sqrt(quad(2));
    CHECK(abs(r.values[0] - (2 - s)) < quad(1e-32));
    CHECK(abs(r.values[1] - 2) < quad(1e-32));
    CHECK(abs(r.values[2] - (2 + s)) < quad(1e-32));
    CHECK(count_at_most(A, quad(1)) == 1);
    CHECK(count_at_most(A, quad(3)) == 2);
    CHECK(count_at_most(A, quad(4)) == 3);
}

TEST_CASE("Jacobi on random Hermitian matrices: trace and inertia") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int n : {4, 7, 12}) {
        HermitianMatrix<double> A(n);
        double tr = 0;
        for (int i = 0; i < n; ++i) {
            A(i, i) = u(rng);
            tr += A(i, i).re;
            for (int j = i + 1; j < n; ++j) {
                A(i, j) = Cplx<double>(u(rng), u(rng));
                A(j, i) = A(i, j).conj();
            }
        }
        const auto r = jacobi_eigen(A, false);
        double s = 0;
        for (double v : r.values) s += v;
        CHECK(s == doctest::Approx(tr).epsilon(1e-12));
        CHECK(std::is_sorted(r.values.begin(), r.values.end()));
        for (int k = 0; k < n; ++k) CHECK(count_at_most(A, r.values[k] + 1e-9) >= k + 1);
    }
}

TEST_CASE("free Hill equation") {
    const auto V = mathieu(0.0);
    HillSolver<double> h(V, 0.0, 10.0);
    const auto m = h.monodromy(2.0);
    CHECK(m.m11 * m.m22 - m.m12 * m.m21 == doctest::Approx(1.0).epsilon(1e-12));
    // period pi: trace 2 cos(pi sqrt(lambda))
    CHECK(m.discriminant == doctest::Approx(2 * std::cos(M_PI * std::sqrt(2.0))).epsilon(1e-10));
    for (double lam : {0.5, 2.0, 5.0}) CHECK(h.ids(lam) == doctest::Approx(std::sqrt(lam) / M_PI).epsilon(1e-10));
}

TEST_CASE("Mathieu monodromy is unimodular and the first gap opens at 2|a| eps") {
    const auto V = mathieu(0.005);
    const auto g = hill_gap<double>(V, 1, 1e-3);
    CHECK(g.open);
    CHECK(g.length() == doctest::Approx(2 * 0.005 * 1e-3).epsilon(1e-4));
    HillSolver<double> h(V, 1e-3, 4.0);
    const auto m = h.monodromy(g.center);
    CHECK(m.m11 * m.m22 - m.m12 * m.m21 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.gap_indicator() > 0);
}

TEST_CASE("Hill IDS is refinement stable") {
    const auto V = mathieu(0.006, 0.002);
    HillSolver<double> h(V, 25.0, 9.0);
    const auto r = h.refined(2);
    for (double lam : {0.7, 2.3, 6.1}) CHECK(h.ids(lam) == doctest::Approx(r.ids(lam)).epsilon(1e-9));
}

TEST_CASE("truncated IDS agrees with Hill on a periodic potential") {
    const auto V = mathieu(0.005, 0.002);
    TruncatedIdsOptions o;
    o.M = 8;
    for (double lam : {0.6, 2.0, 3.1}) {
        const double t = truncated_ids<double>(V, lam, 20.0, o).value;
        CHECK(t == doctest::Approx(hill_ids<double>(V, lam, 20.0)).epsilon(1e-9));
    }
}

TEST_CASE("Rayleigh-Schroedinger second order for a cosine potential") {
    const auto V = mathieu(0.005);
    for (double xi : {0.3, 1.7, -2.4}) {
        const quad x(xi);
        quad expect = 0;
        for (int s : {1, -1}) expect -= quad(2.5e-5) / ((x + 2 * s) * (x + 2 * s) - x * x);
        CHECK(abs(rayleigh_schrodinger_f2(V, x, 3) - expect) < quad(1e-20));
    }
}

TEST_CASE("oracle cache round trip") {
    const std::string path = "oracle_cache_test.jsonl";
    std::remove(path.c_str());
    {
        OracleCache c(path);
        c.store(OracleCache::key(42, "hill", "2", "1e-3", 6), "0.123");
    }
    OracleCache c(path);
    std::string v;
    CHECK(c.lookup(OracleCache::key(42, "hill", "2", "1e-3", 6), v));
    CHECK(v == "0.123");
    CHECK_FALSE(c.lookup(OracleCache::key(43, "hill", "2", "1e-3", 6), v));
    std::remove(path.c_str());
}
