#include "doctest.h"

#include "qpg/almost.hpp"
#include "qpg/errors.hpp"

#include <cmath>
#include <string>

using namespace qpg;

namespace {
BasisPtr two() { return std::make_shared<GeneratorBasis>(std::vector<std::string>{"1", "sqrt:2"}); }
}  // namespace

TEST_CASE("minimal smoothness") {
    CHECK(minimal_smoothness_P(3, 1.0) == doctest::Approx(72.0));
    CHECK(minimal_smoothness_P(3, 0.8) == doctest::Approx(57.6));
}

TEST_CASE("schedule rejects rough potentials and names the minimal P") {
    ScheduleParams p;
    p.N = 3;
    p.P = 50;
    p.P0 = 1;
    p.C = 0.002;
    try {
        build_schedule(two(), standard_theta0(2), p);
        FAIL("expected config error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::config);
        CHECK(std::string(e.what()).find("72") != std::string::npos);
    }
}

TEST_CASE("dyadic schedule arithmetic") {
    ScheduleParams p;
    p.N = 3;
    p.P = 60;
    p.P0 = 0.8;
    p.C = 0.002;
    p.eps0 = quad(1e-30);
    p.n_max = 4;
    const auto s = build_schedule(two(), standard_theta0(2), p);
    CHECK(s.smoothness() == doctest::Approx(0.12));
    for (int n = 0; n <= 4; ++n) {
        CHECK(s.eps(n) == quad(1e-30) / quad(1 << n));
        // L_tilde = ceil(eps_n^{-2N/P})
        const double expect = std::ceil(std::pow(static_cast<double>(s.eps(n)), -0.1) - 1e-9);
        CHECK(static_cast<double>(s.L_tilde(n)) == doctest::Approx(expect));
    }
    REQUIRE(s.windows().size() == 5);
    for (const auto& w : s.windows()) {
        CHECK(w.disjoint);
        CHECK(w.measure_ok);
        CHECK(w.max_order == 3 * 3 * w.L_tilde);
    }
}

TEST_CASE("super-resonance search on a small depth") {
    ScheduleParams p;
    p.N = 3;
    p.P = 60;
    p.P0 = 0.8;
    p.C = 0.002;
    p.eps0 = quad(1e-30);
    p.n_max = 2;
    const auto s = build_schedule(two(), standard_theta0(2), p);
    DecayRule r{0.002, 60, 7};
    const auto V = PotentialSpec::from_decay(two(), standard_theta0(2), r, 0.0, 1);
    SuperResonanceOptions o;
    o.depth = 1;
    const auto c = find_super_resonance(s, V, o);
    CHECK(c.complete);
    REQUIRE(c.jumps.size() == 1);
    CHECK(c.jumps[0].exceeds);
    CHECK(c.jumps[0].unit_jump);
    REQUIRE(c.trace.size() == 1);
    CHECK(c.trace[0].condition_a);
    CHECK(c.trace[0].condition_b);
    // deterministic
    const auto again = find_super_resonance(s, V, o);
    CHECK(again.xi_star_decimal == c.xi_star_decimal);
    const auto rep = demonstrate_oscillation(c);
    CHECK(rep.oscillates);
}

TEST_CASE("super-resonance needs a two-generator basis") {
    ScheduleParams p;
    p.P = 60;
    p.P0 = 0.8;
    p.C = 0.002;
    auto one = std::make_shared<GeneratorBasis>(std::vector<std::string>{"1"});
    const auto s = build_schedule(one, standard_theta0(1), p);
    DecayRule r{0.002, 60, 7};
    const auto V = PotentialSpec::from_decay(one, standard_theta0(1), r, 0.0, 1);
    try {
        find_super_resonance(s, V);
        FAIL("expected domain error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::domain);
    }
}
