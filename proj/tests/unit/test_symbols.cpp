#include "doctest.h"

#include "qpg/symbols.hpp"

#include <cmath>

using namespace qpg;

TEST_CASE("mollifier is a smooth step between 1/4 and 1/2") {
    for (auto m : {Mollifier::exp1, Mollifier::exp2}) {
        CHECK(mollifier_phi(0.0, m) == 0.0);
        CHECK(mollifier_phi(0.25, m) == 0.0);
        CHECK(mollifier_phi(-0.2, m) == 0.0);
        CHECK(mollifier_phi(0.5, m) == 1.0);
        CHECK(mollifier_phi(-3.0, m) == 1.0);
        double prev = 0;
        for (int i = 0; i <= 100; ++i) {
            const double t = 0.25 + 0.25 * i / 100;
            const double v = mollifier_phi(t, m);
            CHECK(v >= prev);
            CHECK(v == doctest::Approx(mollifier_phi(-t, m)));
            prev = v;
        }
        // symmetric step: phi(3/8) = 1/2
        CHECK(mollifier_phi(0.375, m) == doctest::Approx(0.5).epsilon(1e-12));
    }
    CHECK(mollifier_phi(0.3, Mollifier::exp1) != mollifier_phi(0.3, Mollifier::exp2));
}

TEST_CASE("quad and double mollifiers agree") {
    for (double t : {0.26, 0.3, 0.4, 0.49})
        CHECK(static_cast<double>(mollifier_phi<quad>(quad(t), Mollifier::exp1)) ==
              doctest::Approx(mollifier_phi(t, Mollifier::exp1)).epsilon(1e-14));
}

TEST_CASE("cut-off family geometry") {
    CutoffFamily<double> c{0.5, Mollifier::exp1};
    CHECK(c.half_width(2.0) == doctest::Approx(0.0625));
    CHECK(c.phi(2.0, -2.0) == 0.0);  // zone centre
    CHECK(c.phi(2.0, 1.0) == 1.0);
    CHECK(c.chi(2.0, 1.0) == doctest::Approx(1.0 / (4 * 3.0 * 2.0)));
    CHECK(c.chi(0.0, 1.0) == 0.0);
}

TEST_CASE("expression pool hash-conses") {
    ExprPool P;
    const NodeId a = P.vhat(Freq::unit(0));
    const NodeId b = P.vhat(Freq::unit(0));
    CHECK(a == b);
    CHECK(P.add(a, P.chi(Freq::unit(0))) == P.add(a, P.chi(Freq::unit(0))));
    CHECK(P.constant(Cplx<quad>(0)) == kZero);
    CHECK(P.constant(Cplx<quad>(1)) == kOne);
    CHECK(P.mul(a, kZero) == kZero);
    CHECK(P.mul(a, kOne) == a);
    CHECK(P.sub(a, a) == kZero);
}

TEST_CASE("programs evaluate leaves against the cut-off family") {
    auto basis = std::make_shared<GeneratorBasis>(std::vector<std::string>{"1"});
    const auto V = PotentialSpec::from_coefficients(basis, standard_theta0(1),
                                                    {{Freq::unit(0), Cplx<quad>(quad(0.003), quad(0.001))}});
    ExprPool P;
    const Freq t = Freq::unit(0);
    const std::vector<NodeId> roots{P.vhat(t), P.chi(t), P.phi(t, t), P.xisq(t),
                                    P.mul(P.vhat(t), P.vhat(-t))};
    Program<double> prog(P, roots, V);
    CutoffFamily<double> c{0.25, Mollifier::exp1};
    prog.set_cutoffs(c);
    for (double xi : {-1.02, -0.5, 0.7}) {
        const auto v = prog.eval(xi);
        CHECK(v[0].re == doctest::Approx(0.003));
        CHECK(v[0].im == doctest::Approx(0.001));
        CHECK(v[1].re == doctest::Approx(c.chi(1.0, xi)));
        CHECK(v[2].re == doctest::Approx(c.phi(1.0, xi + 2)));
        CHECK(v[3].re == doctest::Approx((xi + 2) * (xi + 2)));
        CHECK(v[4].re == doctest::Approx(1e-5));
        CHECK(v[4].im == doctest::Approx(0.0));
    }
}

TEST_CASE("commutator of a symbol with itself vanishes") {
    auto basis = std::make_shared<GeneratorBasis>(std::vector<std::string>{"1"});
    const auto V = PotentialSpec::from_coefficients(basis, standard_theta0(1), {{Freq::unit(0), Cplx<quad>(quad(0.002))}});
    ExprPool P;
    const HomSymbol v = potential_symbol(P, V);
    const HomSymbol c = ad(P, v, v);
    std::vector<NodeId> roots;
    for (const auto& [th, n] : c) roots.push_back(n);
    if (!roots.empty()) {
        Program<double> prog(P, roots, V);
        for (double xi : {-0.7, 0.1, 1.3})
            for (const auto& z : prog.eval(xi)) CHECK(abs(z) < 1e-15);
    }
}

TEST_CASE("solve_commutator cancels the natural part") {
    auto basis = std::make_shared<GeneratorBasis>(std::vector<std::string>{"1", "sqrt:2"});
    const auto V = PotentialSpec::from_coefficients(
        basis, standard_theta0(2),
        {{Freq::unit(0), Cplx<quad>(quad(0.002), quad(0.0005))}, {Freq::unit(1), Cplx<quad>(quad(0.001))}});
    ExprPool P;
    const HomSymbol v = potential_symbol(P, V);
    const HomSymbol psi = solve_commutator(P, v);
    const HomSymbol r = add(P, ad_h0(P, psi), natural_projection(P, v));
    std::vector<NodeId> roots;
    for (const auto& [th, n] : r) roots.push_back(n);
    Program<double> prog(P, roots, V);
    prog.set_cutoffs({0.2, Mollifier::exp1});
    for (double xi = -3; xi <= 3; xi += 0.0137)
        for (const auto& z : prog.eval(xi)) CHECK(abs(z) < 1e-15);
}
