#include "qpg/gaps.hpp"

#include "qpg/errors.hpp"
#include "qpg/parallel.hpp"
#include "qpg/roots.hpp"

#include <cmath>

namespace qpg {

namespace {

Freq positive_rep(const GeneratorBasis& basis, const Freq& theta0) {
    const quad v = basis.value_q(theta0);
    require(v != 0, ErrorCode::domain, "gap: theta0 must be nonzero");
    return v > 0 ? theta0 : -theta0;
}

}  // namespace

GapEndpoints gap_endpoints(const SpectralMap<quad>& map, const Freq& theta_in) {
    const auto& basis = *map.evaluator().run().potential().basis();
    const Freq theta0 = positive_rep(basis, theta_in);
    const int zi = map.zones().index_of(-theta0);
    require(zi >= 0, ErrorCode::domain,
            "gap: theta0 = " + basis.format(theta0) + " is not in the active frequency set");
    const quad w = map.zones().zones()[zi].half_width;
    // the off-diagonal cut-off is identically one for |zeta| <= w/4
    const quad a = -w / 4, b = w / 4;
    const quad xtol = quad(1e-30) * w;

    GapEndpoints g;
    g.theta0 = theta0;
    g.eps = map.eps();
    g.zone_half_width = w;
    auto [zm, negmax] = brent_min<quad>([&](quad z) { return -map.sigma(theta0, z).first; }, a, b, xtol);
    auto [zp, pmin] = brent_min<quad>([&](quad z) { return map.sigma(theta0, z).second; }, a, b, xtol);
    g.zeta_minus = zm;
    g.zeta_plus = zp;
    g.sigma_minus_max = -negmax;
    g.sigma_plus_min = pmin;
    g.gap = std::max(quad(0), pmin + negmax);
    using std::abs;
    g.boundary_flag = abs(zm) > w / 100 || abs(zp) > w / 100;
    return g;
}

GapEndpoints gap_endpoints(const GaugeRun& run, const Freq& theta0, quad eps) {
    const SpectralMap<quad> map(run, eps);
    return gap_endpoints(map, theta0);
}

GapLeadingTerm gap_leading_term(const GaugeRun& run, const Freq& theta_in) {
    const auto& V = run.potential();
    const Freq theta0 = positive_rep(*V.basis(), theta_in);
    GapLeadingTerm t;
    using std::abs;
    const Cplx<quad> nu = V.coef(theta0);
    if (nu.norm2() > 0) {
        t.power = 1;
        t.coefficient = 2 * abs(nu);
        return t;
    }
    H2Evaluator<quad> ev(run);
    std::vector<Cplx<quad>> c;
    ev.orders(V.basis()->value_q(theta0), -theta0, c);
    for (int p = 2; p <= ev.order(); ++p) {
        const quad m = abs(c[p - 1]);
        if (m > quad(1e-30)) {
            t.power = p;
            t.coefficient = 2 * m;
            return t;
        }
    }
    return t;
}

GapExpansion gap_expansion(const GaugeRun& run, const Freq& theta0, const std::vector<quad>& ladder,
                           const FitGuard& guard) {
    GapExpansion out;
    out.theta0 = positive_rep(*run.potential().basis(), theta0);
    out.points.resize(ladder.size());
    parallel_for(ladder.size(), [&](size_t i) { out.points[i] = gap_endpoints(run, theta0, ladder[i]); });
    std::vector<Sample> samples;
    for (const auto& p : out.points)
        samples.push_back({static_cast<real_fit>(p.eps), static_cast<real_fit>(p.gap)});
    out.fit = fit_expansion(samples, exponent_series(1, std::max(2, run.N() - 1)), guard);
    out.predicted = gap_leading_term(run, theta0);
    return out;
}

}  // namespace qpg
