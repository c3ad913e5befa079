#include "doctest.h"

#include "qpg/errors.hpp"
#include "qpg/spectral.hpp"

#include <cmath>

using namespace qpg;

namespace {
PotentialSpec mathieu(double a, double tau = 0) {
    auto basis = std::make_shared<GeneratorBasis>(std::vector<std::string>{"1"});
    return PotentialSpec::from_coefficients(basis, standard_theta0(1),
                                            {{Freq::unit(0), Cplx<quad>(quad(a))}, {Freq::zero(), Cplx<quad>(quad(tau))}});
}
}  // namespace

TEST_CASE("2x2 fiber eigenvalues") {
    FiberMatrix<double> m;
    m.a = 1.0;
    m.d = 3.0;
    m.b = Cplx<double>(0.5, 0.5);
    m.c = m.b.conj();
    const auto [lo, hi] = m.eigenvalues();
    const double r = std::sqrt(1.0 + 0.5);
    CHECK(lo == doctest::Approx(2 - r));
    CHECK(hi == doctest::Approx(2 + r));
    CHECK(m.hermitian_defect() == 0.0);
}

TEST_CASE("zones are centred at -theta with width / (4|theta|)") {
    GeneratorBasis b({"1"});
    const auto zs = build_zones(b, {Freq::unit(0), Freq::unit(0, -1), Freq::unit(0, 2)}, quad(0.25));
    CHECK(zs.size() == 3);
    for (const auto& z : zs.zones()) {
        const double t = b.value_d(z.theta);
        CHECK(static_cast<double>(z.center) == doctest::Approx(-t));
        CHECK(static_cast<double>(z.half_width) == doctest::Approx(0.25 / (4 * std::abs(t))));
    }
    CHECK(zs.locate(-1.0) == zs.index_of(Freq::unit(0)));
    CHECK(zs.locate(0.0) == -1);
    CHECK(zs.locate_linear(-2.0) == zs.index_of(Freq::unit(0, 2)));
}

TEST_CASE("overlapping wide zones are a geometry error") {
    GeneratorBasis b({"1"});
    try {
        build_zones(b, {Freq::unit(0), Freq::unit(0, 2)}, quad(8));
        FAIL("expected geometry error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::geometry);
    }
}

TEST_CASE("default delta keeps wide zones disjoint") {
    auto basis = std::make_shared<GeneratorBasis>(std::vector<std::string>{"1", "sqrt:2"});
    const quad d = default_delta(basis, standard_theta0(2), 3);
    CHECK(d > 0);
    const auto shell = build_shell(basis, standard_theta0(2), 9);
    CHECK_NOTHROW(build_zones(*basis, shell.nonzero_members(9), d, true));
}

TEST_CASE("G map: off zones it is the diagonal, inside a zone it follows the fiber eigenvalues") {
    const auto V = mathieu(0.005);
    ZoneSpec z;
    z.width = default_delta(V.basis(), V.shell().theta0(), 3);
    const GaugeRun run = run_gauge(V, z, GaugeOptions{});
    const SpectralMap<double> map(run, 1e-3);
    CHECK(map.G(0.3) == doctest::Approx(map.diag(0.3)));
    CHECK(map.zone_of(0.3) == -1);
    // G is even for a real even potential
    for (double xi : {0.1, 0.57, 1.3, 2.2}) CHECK(map.G(xi) == doctest::Approx(map.G(-xi)).epsilon(1e-13));
    // sigma_- <= sigma_+ throughout the zone around -1
    const int k = map.zones().index_of(Freq::unit(0));
    REQUIRE(k >= 0);
    const double hw = static_cast<double>(map.zones().zones()[k].half_width);
    for (int i = -10; i <= 10; ++i) {
        const auto [lo, hi] = map.sigma(Freq::unit(0), 0.09 * i * hw);
        CHECK(lo <= hi);
    }
}
