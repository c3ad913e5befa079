#include "doctest.h"

#include "qpg/asymptotics.hpp"
#include "qpg/errors.hpp"

#include <cmath>

using namespace qpg;

namespace {
std::vector<Sample> synth(const std::vector<double>& ex, const std::vector<double>& co, int n, real_fit shift = 0) {
    std::vector<Sample> out;
    for (const quad& e : geometric_ladder(quad(1e-3), n)) {
        const real_fit x = static_cast<real_fit>(e);
        real_fit v = 0;
        for (size_t i = 0; i < ex.size(); ++i) v += co[i] * std::pow(x, static_cast<real_fit>(ex[i]));
        out.push_back({x, v + shift * x * x});
    }
    return out;
}
}  // namespace

TEST_CASE("geometric ladder") {
    const auto l = geometric_ladder(quad(1e-3), 12);
    CHECK(l.size() == 12);
    CHECK(l.front() == quad(1e-3));
    for (size_t i = 1; i < l.size(); ++i) CHECK(l[i - 1] / l[i] == 2);
}

TEST_CASE("exact polynomial data is recovered") {
    const auto s = synth({1, 2, 3}, {0.01, -0.5, 3.0}, 12);
    const auto f = fit_expansion(s, {1, 2, 3});
    CHECK(static_cast<double>(f.coefficient(1)) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(static_cast<double>(f.coefficient(2)) == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(static_cast<double>(f.coefficient(3)) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK_FALSE(f.model_failure);
    CHECK(f.coefficient(4) == 0);
}

TEST_CASE("half-integer exponents") {
    const auto s = synth({0.5, 1.5, 2.5}, {0.014, 4e-5, 2e-8}, 12);
    const auto f = fit_expansion(s, exponent_series(0.5, 3));
    CHECK(static_cast<double>(f.coefficient(0.5)) == doctest::Approx(0.014).epsilon(1e-12));
}

TEST_CASE("too few samples is a fit error") {
    const auto s = synth({1, 2}, {1, 1}, 4);
    try {
        fit_expansion(s, {1, 2, 3});
        FAIL("expected fit error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::fit);
    }
}

TEST_CASE("power law fit and noise floor") {
    auto s = synth({2}, {1.25e-5}, 12);
    const auto p = fit_power_law(s);
    CHECK(p.exponent == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(static_cast<double>(p.coefficient) == doctest::Approx(1.25e-5).epsilon(1e-8));
    CHECK(p.used == 12);
    s.back().value = 1e-40;
    const auto q = fit_power_law(s, 1e-30);
    CHECK(q.used == 11);
}

TEST_CASE("stitching identical windows is consistent") {
    std::vector<WindowFit> w;
    for (int n = 0; n < 4; ++n) {
        std::vector<Sample> s;
        const real_fit en = std::ldexp(1e-6L, -n);
        for (int i = 0; i < 8; ++i) {
            const real_fit x = en * std::pow(4.0L, -i / 7.0L);
            s.push_back({x, 0.5L * x * x - 3 * x * x * x});
        }
        w.push_back({n, fit_expansion(s, {1, 2, 3})});
    }
    const auto r = stitch(w);
    CHECK(r.consistent);
    REQUIRE(r.global);
    CHECK(static_cast<double>(r.global->coefficient(2)) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(r.certificate.empty());
}

TEST_CASE("alternating eps^2 coefficients produce a certificate") {
    std::vector<WindowFit> w;
    for (int n = 0; n < 4; ++n) {
        std::vector<Sample> s;
        const real_fit en = std::ldexp(1e-6L, -n);
        const real_fit c2 = n % 2 ? 0.5L : 0.7L;
        for (int i = 0; i < 8; ++i) {
            const real_fit x = en * std::pow(4.0L, -i / 7.0L);
            s.push_back({x, c2 * x * x});
        }
        w.push_back({n, fit_expansion(s, {1, 2, 3})});
    }
    const auto r = stitch(w);
    CHECK_FALSE(r.consistent);
    REQUIRE_FALSE(r.certificate.empty());
    bool has2 = false;
    for (const auto& c : r.certificate) has2 = has2 || c.exponent == 2.0;
    CHECK(has2);
}
