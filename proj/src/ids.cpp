#include "qpg/ids.hpp"

#include "qpg/errors.hpp"
#include "qpg/parallel.hpp"
#include "qpg/roots.hpp"

#include <cmath>

namespace qpg {

namespace {

template <class T>
T root_tolerance(const IdsOptions& opt, T lambda) {
    using std::abs;
    if (opt.root_tol > 0) return static_cast<T>(opt.root_tol) * (1 + abs(lambda));
    if (std::numeric_limits<T>::digits > 64) return 64 * eps_of<T>() * (1 + abs(lambda));
    return T(1e-13) * (1 + abs(lambda));
}

template <class T>
T extremum_tolerance(T w) {
    return (std::numeric_limits<T>::digits > 64 ? T(1e-30) : T(1e-15)) * w;
}

quad to_quad(const Rational& r) {
    return quad(numerator(r).str()) / quad(denominator(r).str());
}

}  // namespace

template <class T>
T ids_value(const SpectralMap<T>& map, T lambda, const IdsOptions& opt) {
    using std::abs;
    using std::sqrt;
    const T tol = root_tolerance(opt, lambda);
    auto diag = [&](T x) { return map.diag(x) - lambda; };

    T xl = 0;
    if (diag(T(0)) <= 0) {
        T hi = sqrt(abs(lambda) + 1) + 1;
        while (diag(hi) <= 0) hi *= 2;
        xl = brent_root<T>(diag, T(0), hi, tol);
    }
    T off = xl;
    const auto& zones = map.zones().zones();
    for (const auto& z : zones) {
        const T lo = static_cast<T>(z.lo()), hi = static_cast<T>(z.hi());
        if (hi <= 0) continue;
        off -= std::max(T(0), std::min(hi, xl) - std::max(lo, T(0)));
    }
    T meas = 2 * off;

    for (const auto& z : zones) {
        if (z.center <= 0) continue;
        const Freq theta0 = -z.theta;
        const T w = static_cast<T>(z.half_width);
        const T etol = extremum_tolerance(w);
        auto sm = [&](T zeta) { return map.sigma(theta0, zeta).first - lambda; };
        auto sp = [&](T zeta) { return map.sigma(theta0, zeta).second - lambda; };

        // lower branch: single interior maximum
        const T m1 = sm(-w), m2 = sm(w);
        if (std::min(m1, m2) <= 0) {
            auto [zm, negmax] = brent_min<T>([&](T x) { return -sm(x); }, -w / 4, w / 4, etol);
            if (-negmax <= 0) {
                meas += 2 * w;
            } else {
                if (m1 <= 0) meas += brent_root<T>(sm, -w, zm, tol) + w;
                if (m2 <= 0) meas += w - brent_root<T>(sm, zm, w, tol);
            }
        }
        // upper branch: single interior minimum
        const T p1 = sp(-w), p2 = sp(w);
        if (std::max(p1, p2) <= 0) {
            meas += 2 * w;
        } else {
            auto [zp, pmin] = brent_min<T>(sp, -w / 4, w / 4, etol);
            if (pmin <= 0) {
                const T left = p1 <= 0 ? -w : brent_root<T>(sp, -w, zp, tol);
                const T right = p2 <= 0 ? w : brent_root<T>(sp, zp, w, tol);
                meas += right - left;
            }
        }
    }
    return meas / (2 * pi_of<T>());
}

template double ids_value<double>(const SpectralMap<double>&, double, const IdsOptions&);
template quad ids_value<quad>(const SpectralMap<quad>&, quad, const IdsOptions&);

quad ids_value(const GaugeRun& run, quad eps, quad lambda, const IdsOptions& opt) {
    const SpectralMap<quad> map(run, eps);
    return ids_value(map, lambda, opt);
}

namespace {

double g_extent(const SpectralMap<double>& map, double lambda) {
    double X = std::sqrt(std::abs(lambda) + 1) + 1;
    while (map.G(X) <= lambda || map.G(-X) <= lambda) X *= 2;
    return X;
}

}  // namespace

double ids_indicator_quadrature(const SpectralMap<double>& map, double lambda, int samples_per_unit) {
    const double X = g_extent(map, lambda);
    const int n = static_cast<int>(std::ceil(2 * X * samples_per_unit));
    const double h = 2 * X / n;
    auto below = [&](double x) { return map.G(x) <= lambda; };
    double meas = 0;
    double a = -X;
    bool ba = below(a);
    for (int i = 1; i <= n; ++i) {
        const double b = -X + i * h;
        const bool bb = below(b);
        if (ba == bb) {
            if (ba) meas += b - a;
        } else {
            // crossing inside (a, b)
            const double c = bisect_predicate<double>([&](double x) { return below(x) == bb; }, a, b, 1e-15);
            meas += ba ? c - a : b - c;
        }
        a = b;
        ba = bb;
    }
    return meas / (2 * pi_of<double>());
}

int count_level_crossings(const SpectralMap<double>& map, double lambda, int samples_per_unit) {
    const double X = g_extent(map, lambda);
    const int n = static_cast<int>(std::ceil(2 * X * samples_per_unit));
    const double h = 2 * X / n;
    int crossings = 0;
    bool prev = map.G(-X) <= lambda;
    for (int i = 1; i <= n; ++i) {
        const bool cur = map.G(-X + i * h) <= lambda;
        if (cur != prev) ++crossings;
        prev = cur;
    }
    return crossings;
}

const char* case_name(CaseKind k) {
    switch (k) {
        case CaseKind::negative: return "negative";
        case CaseKind::nonresonant: return "nonresonant";
        case CaseKind::res_inside_gap: return "res_inside_gap";
        case CaseKind::res_integer: return "res_integer";
        case CaseKind::res_half_integer: return "res_half_integer";
        case CaseKind::res_flat: return "res_flat";
        case CaseKind::zero_tau_pos: return "zero_tau_pos";
        case CaseKind::zero_tau_neg: return "zero_tau_neg";
        case CaseKind::zero_tau_zero: return "zero_tau_zero";
        case CaseKind::degenerate: return "degenerate";
    }
    return "unknown";
}

quad CaseLabel::constant() const {
    using std::sqrt;
    switch (kind) {
        case CaseKind::nonresonant: return sqrt(lambda) / pi_of<quad>();
        case CaseKind::res_inside_gap:
        case CaseKind::res_integer:
        case CaseKind::res_half_integer:
        case CaseKind::res_flat:
        case CaseKind::degenerate: return resonant ? theta0_value / pi_of<quad>() : sqrt(std::max(lambda, quad(0))) / pi_of<quad>();
        default: return 0;
    }
}

bool CaseLabel::is_constant() const {
    return kind == CaseKind::negative || kind == CaseKind::zero_tau_pos || kind == CaseKind::res_inside_gap ||
           kind == CaseKind::res_flat;
}

std::vector<double> CaseLabel::exponents(int terms) const {
    switch (kind) {
        case CaseKind::nonresonant: return exponent_series(1, terms);
        case CaseKind::res_integer:
            return exponent_series(nu.norm2() == 0 && tau == 0 ? 2 : 1, terms);
        case CaseKind::res_half_integer: return exponent_series(k / 2.0, terms);
        case CaseKind::zero_tau_neg: return exponent_series(0.5, terms);
        case CaseKind::zero_tau_zero: return exponent_series(1, terms);
        default: return {};
    }
}

std::optional<std::pair<double, quad>> CaseLabel::analytic_leading() const {
    using std::abs;
    using std::sqrt;
    const quad pi = pi_of<quad>();
    switch (kind) {
        case CaseKind::nonresonant: return std::make_pair(1.0, quad(-tau / (2 * pi * sqrt(lambda))));
        case CaseKind::res_integer:
            if (nu.norm2() == 0 && tau == 0) return std::nullopt;
            return std::make_pair(1.0, quad(-sqrt(tau * tau - nu.norm2()) / (2 * pi * theta0_value)));
        case CaseKind::zero_tau_neg: return std::make_pair(0.5, quad(sqrt(abs(tau)) / pi));
        default: return std::nullopt;
    }
}

CaseLabel classify(const GaugeRun& run, const std::string& lambda_text, double tolerance) {
    using std::abs;
    const auto& V = run.potential();
    const auto& basis = *V.basis();
    CaseLabel L;
    L.lambda_text = lambda_text;
    L.tolerance = tolerance;
    const Rational lr = parse_rational(lambda_text);
    L.lambda = to_quad(lr);
    L.tau = V.tau();
    if (lr < 0) {
        L.kind = CaseKind::negative;
        return L;
    }
    if (lr == 0) {
        L.kind = L.tau > 0 ? CaseKind::zero_tau_pos : L.tau < 0 ? CaseKind::zero_tau_neg : CaseKind::zero_tau_zero;
        return L;
    }
    // exact membership of sqrt(lambda) in Theta_depth
    const LatticeShell shell = build_shell(V.basis(), V.shell().theta0(), run.depth());
    const double ld = static_cast<double>(L.lambda);
    for (const auto& f : shell.members()) {
        const double v = basis.value_d(f);
        if (v <= 0 || std::abs(v * v - ld) > 1e-6 * (1 + ld)) continue;
        if (square_equals(basis, f, lr)) {
            L.resonant = true;
            L.theta0 = f;
            L.theta0_value = basis.value_q(f);
            break;
        }
    }
    if (!L.resonant) {
        L.kind = CaseKind::nonresonant;
        return L;
    }
    L.nu = V.coef(L.theta0);
    if (run.h2_order() >= 2) {
        H2Evaluator<quad> ev(run);
        std::vector<Cplx<quad>> c;
        ev.orders(L.theta0_value, Freq::zero(), c);
        const quad fp = c[1].re;
        ev.orders(-L.theta0_value, Freq::zero(), c);
        const quad fm = c[1].re;
        L.s2 = (fp + fm) / 2;
        ev.orders(L.theta0_value, -L.theta0, c);
        L.g2 = c[1];
    }
    L.discriminant = L.s2 * L.tau - (L.nu * L.g2.conj()).re;
    L.s2sq_minus_g2sq = L.s2 * L.s2 - L.g2.norm2();
    const quad tol(tolerance);
    const quad anu = abs(L.nu), atau = abs(L.tau);
    if (anu > 0) {
        if (abs(atau - anu) <= tol * std::max(atau, anu)) {
            const quad scale = abs(L.s2 * L.tau) + anu * abs(L.g2);
            if (scale == 0 || abs(L.discriminant) <= tol * scale) {
                L.kind = CaseKind::degenerate;
            } else if (L.discriminant < 0) {
                L.kind = CaseKind::res_inside_gap;
            } else {
                L.kind = CaseKind::res_half_integer;
                L.k = 3;
            }
        } else {
            L.kind = atau < anu ? CaseKind::res_inside_gap : CaseKind::res_integer;
        }
    } else if (L.tau != 0) {
        L.kind = CaseKind::res_integer;
    } else {
        const quad scale = L.s2 * L.s2 + L.g2.norm2();
        if (scale == 0 || abs(L.s2sq_minus_g2sq) <= tol * scale)
            L.kind = CaseKind::degenerate;
        else
            L.kind = L.s2sq_minus_g2sq < 0 ? CaseKind::res_inside_gap : CaseKind::res_integer;
    }
    return L;
}

IdsExpansion ids_expansion(const GaugeRun& run, const CaseLabel& label, const std::vector<quad>& ladder,
                           const FitGuard& guard, const IdsOptions& opt) {
    using std::abs;
    IdsExpansion out;
    out.label = label;
    out.points.resize(ladder.size());
    const quad c0 = label.constant();
    parallel_for(ladder.size(), [&](size_t i) {
        const quad v = ids_value(run, ladder[i], label.lambda, opt);
        out.points[i] = {ladder[i], v, v - c0};
    });
    std::vector<Sample> samples;
    for (const auto& p : out.points) {
        out.max_constant_deviation = std::max(out.max_constant_deviation, abs(p.deviation));
        samples.push_back({static_cast<real_fit>(p.eps), static_cast<real_fit>(p.deviation)});
    }
    if (label.is_constant()) return out;
    const real_fit floor = 1e-30;
    const int terms = std::max(3, run.N());
    if (label.kind == CaseKind::degenerate) {
        // smallest k/2 (k >= 4) whose coefficient clears ten times the residual
        const int cap = std::max(4, 2 * run.N() - 2);
        std::vector<double> ex;
        for (int k = 4; k <= cap + 2; ++k) ex.push_back(k / 2.0);
        out.fit = fit_expansion(samples, ex, guard);
        out.detected_k = -cap;
        const real_fit emax = samples.front().eps;
        for (int k = 4; k <= cap; ++k) {
            const real_fit c = std::abs(out.fit->coefficient(k / 2.0)) * std::pow(emax, k / 2.0L);
            if (c > 10 * out.fit->residual_norm) {
                out.detected_k = k;
                break;
            }
        }
    } else {
        out.fit = fit_expansion(samples, label.exponents(terms), guard);
    }
    try {
        out.power_law = fit_power_law(samples, floor);
    } catch (const Error&) {
        // every deviation is below the noise floor
    }
    return out;
}

}  // namespace qpg
