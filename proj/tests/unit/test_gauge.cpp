#include "doctest.h"

#include "qpg/errors.hpp"
#include "qpg/gauge.hpp"
#include "qpg/oracle.hpp"
#include "qpg/spectral.hpp"

#include <cmath>

using namespace qpg;

namespace {

PotentialSpec mathieu(double a, double tau = 0) {
    auto basis = std::make_shared<GeneratorBasis>(std::vector<std::string>{"1"});
    return PotentialSpec::from_coefficients(basis, standard_theta0(1),
                                            {{Freq::unit(0), Cplx<quad>(quad(a))}, {Freq::zero(), Cplx<quad>(quad(tau))}});
}

PotentialSpec two_freq() {
    auto basis = std::make_shared<GeneratorBasis>(std::vector<std::string>{"1", "sqrt:2"});
    return PotentialSpec::from_coefficients(
        basis, standard_theta0(2),
        {{Freq::unit(0), Cplx<quad>(quad(0.003))}, {Freq::unit(1), Cplx<quad>(quad(0.002), quad(0.001))}});
}

GaugeRun run_for(const PotentialSpec& V, int N) {
    ZoneSpec z;
    z.width = default_delta(V.basis(), V.shell().theta0(), N);
    GaugeOptions o;
    o.N = N;
    return run_gauge(V, z, o);
}

}  // namespace

TEST_CASE("zero potential leaves h2 = xi^2") {
    auto basis = std::make_shared<GeneratorBasis>(std::vector<std::string>{"1"});
    const auto V = PotentialSpec::from_coefficients(basis, standard_theta0(1), {});
    const GaugeRun run = run_gauge(V, ZoneSpec{}, GaugeOptions{});
    H2Evaluator<double> ev(run);
    for (double xi : {-1.0, 0.3, 2.0}) CHECK(ev.h2(xi, Freq::zero(), 0.1).re == doctest::Approx(xi * xi));
    for (int j = 1; j < static_cast<int>(run.psi().size()); ++j)
        for (const auto& [th, n] : run.psi()[j]) CHECK(n == kZero);
}

TEST_CASE("first gauge generator solves the commutator equation") {
    const auto V = mathieu(0.005);
    const GaugeRun run = run_for(V, 2);
    const auto cut = run.zones().family<double>();
    // psi_1(xi, +-1) = i a chi_{+-1}(xi)
    std::vector<NodeId> roots{run.psi()[1].at(Freq::unit(0)), run.psi()[1].at(Freq::unit(0, -1))};
    Program<double> p(run.pool(), roots, V);
    p.set_cutoffs(cut);
    for (double xi = -2.5; xi <= 2.5; xi += 0.0173) {
        const auto v = p.eval(xi);
        CHECK(std::abs(v[0].re) < 1e-18);
        CHECK(v[0].im == doctest::Approx(0.005 * cut.chi(1.0, xi)).epsilon(1e-12));
        CHECK(v[1].im == doctest::Approx(0.005 * cut.chi(-1.0, xi)).epsilon(1e-12));
    }
}

TEST_CASE("second-order diagonal coefficient is minus sum |V|^2 chi") {
    const auto V = two_freq();
    const GaugeRun run = run_for(V, 3);
    H2Evaluator<double> ev(run, 3);
    const auto cut = run.zones().family<double>();
    std::vector<Cplx<double>> c;
    for (double xi = -3; xi <= 3; xi += 0.0191) {
        ev.orders(xi, Freq::zero(), c);
        double expect = 0;
        for (const auto& th : V.support())
            expect -= static_cast<double>(V.coef(th).norm2()) * cut.chi(V.basis()->value_d(th), xi);
        CHECK(c[1].re == doctest::Approx(expect).epsilon(1e-10).scale(1e-12));
        CHECK(std::abs(c[1].im) < 1e-18);
    }
}

TEST_CASE("invariants hold on periodic and quasi-periodic potentials") {
    for (const auto& V : {mathieu(0.005, 0.002), two_freq()}) {
        const GaugeRun run = run_for(V, 3);
        std::vector<double> xis;
        for (double x = -4; x <= 4; x += 0.0371) xis.push_back(x);
        const auto r = check_gauge_invariants(run, xis);
        CHECK(r.cancellation_max <= 1e-12);
        CHECK(r.hermitian_max <= 1e-12);
        CHECK(r.off_zone_max <= 1e-12);
        CHECK(r.first_order_max <= 1e-12);
        CHECK(r.support_ok);
        CHECK(r.structure_ok);
        CHECK(r.reflection_checked == (V.dim() == 1));
    }
}

TEST_CASE("rebinding the DAG matches a fresh run") {
    const auto V1 = two_freq();
    const auto V2 = V1.scaled(quad(1.7));
    const GaugeRun fresh = run_for(V2, 3);
    const GaugeRun reused = run_for(V1, 3).with_potential(V2);
    H2Evaluator<double> a(fresh), b(reused);
    for (double xi : {-1.3, -0.7, 0.2, 1.1})
        for (const auto& th : fresh.h2_support()) {
            const auto x = a.h2(xi, th, 1e-3), y = b.h2(xi, th, 1e-3);
            CHECK(abs(x - y) <= 1e-15 * (1 + abs(x)));
        }
}

TEST_CASE("h2 support grows with the order") {
    const GaugeRun run = run_for(mathieu(0.005), 3);
    for (int p = 1; p <= run.depth(); ++p)
        for (const auto& [th, n] : run.h2()[p]) CHECK(th.l1() <= p);
    CHECK(extract_f(run, 1, Freq::unit(0)) != kZero);
}

TEST_CASE("norm report respects the y bound at small eps") {
    const GaugeRun run = run_for(mathieu(0.005), 3);
    SupGrid g;
    g.per_unit = 512;
    const auto r = verify_norm_estimates(run, 1e-3, g);
    CHECK(r.y_bound_ok);
    CHECK(r.V_norm == doctest::Approx(0.01));
}
