#include "doctest.h"

#include "qpg/errors.hpp"
#include "qpg/lattice.hpp"

#include <cmath>
#include <set>

using namespace qpg;

namespace {
BasisPtr basis_of(std::vector<std::string> g) { return std::make_shared<GeneratorBasis>(g); }
}  // namespace

TEST_CASE("generators evaluate their exact forms") {
    GeneratorBasis b({"1", "sqrt:2", "1/3"});
    CHECK(b.dim() == 3);
    CHECK(b.gen(1).value_d == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(std::abs(static_cast<double>(b.gen(1).value_q * b.gen(1).value_q - 2)) < 1e-32);
    Freq f;
    f.c = {2, -1, 3, 0};
    CHECK(b.value_d(f) == doctest::Approx(2 - std::sqrt(2.0) + 1).epsilon(1e-14));
}

TEST_CASE("shell of a one-generator basis is {-L..L}") {
    const auto shell = build_shell(basis_of({"1"}), standard_theta0(1), 5);
    CHECK(shell.size() == 11);
    for (int k = -5; k <= 5; ++k) CHECK(shell.order(Freq::unit(0, k)) == std::abs(k));
    CHECK(shell.order(Freq::unit(0, 6)) == -1);
}

TEST_CASE("shell of (1, sqrt 2) is the l1 ball") {
    for (int L : {1, 3, 7}) {
        const auto shell = build_shell(basis_of({"1", "sqrt:2"}), standard_theta0(2), L);
        CHECK(shell.size() == static_cast<size_t>(2 * L * L + 2 * L + 1));
        for (const auto& f : shell.members()) CHECK(shell.order(f) == f.l1());
        CHECK(shell.members_of_order(L).size() == static_cast<size_t>(4 * L));
    }
}

TEST_CASE("shell members are sorted and symmetric") {
    const auto shell = build_shell(basis_of({"1", "sqrt:2"}), standard_theta0(2), 4);
    CHECK(std::is_sorted(shell.members().begin(), shell.members().end()));
    for (const auto& f : shell.members()) CHECK(shell.contains(-f));
}

TEST_CASE("shell capacity is enforced") {
    try {
        build_shell(basis_of({"1", "sqrt:2"}), standard_theta0(2), 50, 100);
        FAIL("expected capacity error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::capacity);
    }
}

TEST_CASE("exact rationals") {
    CHECK(parse_rational("3/4") == Rational(3, 4));
    CHECK(parse_rational("1.25e-2") == Rational(1, 80));
    CHECK(parse_rational("-7") == Rational(-7));
    CHECK(parse_rational("0.1") == Rational(1, 10));
    CHECK_THROWS_AS(parse_rational("abc"), Error);
}

TEST_CASE("square_equals decides theta^2 = q exactly") {
    GeneratorBasis b({"1", "sqrt:2"});
    CHECK(square_equals(b, Freq::unit(1), Rational(2)));
    CHECK(square_equals(b, Freq::unit(0, 3), Rational(9)));
    CHECK_FALSE(square_equals(b, Freq::unit(0) + Freq::unit(1), Rational(3)));
    // (1 + sqrt2)^2 = 3 + 2 sqrt2 is irrational
    CHECK_FALSE(square_equals(b, Freq::unit(0) + Freq::unit(1), Rational(6)));
    GeneratorBasis t({"1/3"});
    CHECK(square_equals(t, Freq::unit(0, 3), Rational(1)));
    CHECK(square_equals(t, Freq::unit(0, 1), Rational(1, 9)));
}

TEST_CASE("diophantine margin of (1, sqrt 2) is positive and attained") {
    const auto shell = build_shell(basis_of({"1", "sqrt:2"}), standard_theta0(2), 12);
    const auto r = diophantine_margin(shell, 1.0);
    CHECK(r.constant > 0);
    // |a + b sqrt2| (|a| + |b|) >= 1/(2 sqrt2 + 1) for the l1 norm; check the brute force
    double brute = 1e300;
    for (const auto& f : shell.nonzero_members(12))
        brute = std::min(brute, std::abs(shell.basis()->value_d(f)) * f.l1());
    CHECK(r.constant == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("shell size bound dominates the count") {
    for (int L : {1, 2, 5}) {
        const auto shell = build_shell(basis_of({"1", "sqrt:2"}), standard_theta0(2), L);
        CHECK(static_cast<double>(shell.size()) <= shell_size_bound(L, 2));
    }
}
