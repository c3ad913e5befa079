#include "qpg/gauge.hpp"

#include "qpg/errors.hpp"
#include "qpg/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace qpg {

namespace {

quad factorial(int j) {
    quad f = 1;
    for (int k = 2; k <= j; ++k) f *= k;
    return f;
}

}  // namespace

GaugeRun run_gauge(const PotentialSpec& V, const ZoneSpec& zones, const GaugeOptions& opt) {
    require(opt.N >= 1, ErrorCode::domain, "run_gauge: N must be at least 1");
    GaugeRun run;
    run.V_ = V;
    run.zones_ = zones;
    run.N_ = opt.N;
    run.k_tilde_ = opt.k_tilde > 0 ? opt.k_tilde : 2 * opt.N + 1;
    require(run.k_tilde_ > 2 * opt.N, ErrorCode::domain, "run_gauge: k_tilde must exceed 2N");
    run.depth_ = opt.depth > 0 ? opt.depth : run.k_tilde_;
    run.h2_order_ = opt.h2_order > 0 ? opt.h2_order : opt.N;
    require(run.h2_order_ <= run.depth_, ErrorCode::domain, "run_gauge: h2 order exceeds recursion depth");
    require(zones.width > 0, ErrorCode::domain, "run_gauge: zone width must be positive");

    if (opt.check_zones && !V.support().empty()) {
        const int L = std::max(3 * opt.N, run.depth_);
        LatticeShell sh = build_shell(V.basis(), V.shell().theta0(), L);
        build_zones(*V.basis(), sh.nonzero_members(L), zones.width, true);
    }

    run.pool_ = std::make_shared<ExprPool>();
    ExprPool& P = *run.pool_;
    const int K = run.depth_;
    run.psi_.assign(K + 1, {});
    run.B_.assign(K + 2, {});
    run.T_.assign(K + 1, {});
    run.y_.assign(K + 1, {});
    run.h2_.assign(K + 1, {});
    std::vector<HomSymbol> A(K + 1);  // ad(H0; Psi_m) = -(B_m + T_m)^natural

    const HomSymbol Vs = potential_symbol(P, V);
    // nestV[m][j]: sum over k1+..+kj = m of ad(..ad(V;Psi_k1)..;Psi_kj)
    // nestH[m][j]: same with the innermost ad(H0;Psi_k1) replaced by A_k1
    std::vector<std::vector<HomSymbol>> nestV(K + 2, std::vector<HomSymbol>(K + 2));
    std::vector<std::vector<HomSymbol>> nestH(K + 2, std::vector<HomSymbol>(K + 2));

    auto build_B = [&](int l) {
        if (l == 1) return Vs;
        const int m = l - 1;
        for (int j = 1; j <= m; ++j) {
            HomSymbol acc;
            if (j == 1) {
                acc = ad(P, Vs, run.psi_[m]);
            } else {
                for (int kj = 1; kj <= m - (j - 1); ++kj)
                    acc = add(P, acc, ad(P, nestV[m - kj][j - 1], run.psi_[kj]));
            }
            nestV[m][j] = std::move(acc);
        }
        HomSymbol b;
        for (int j = 1; j <= m; ++j) b = add(P, b, nestV[m][j], Cplx<quad>(1 / factorial(j)));
        return b;
    };
    auto build_T = [&](int l) {
        HomSymbol t;
        if (l < 2) return t;
        for (int j = 2; j <= l; ++j) {
            HomSymbol acc;
            for (int kj = 1; kj <= l - (j - 1); ++kj) {
                const HomSymbol& inner = (j - 1 == 1) ? A[l - kj] : nestH[l - kj][j - 1];
                if (inner.empty() || run.psi_[kj].empty()) continue;
                acc = add(P, acc, ad(P, inner, run.psi_[kj]));
            }
            nestH[l][j] = acc;
            t = add(P, t, acc, Cplx<quad>(1 / factorial(j)));
        }
        return t;
    };

    for (int l = 1; l <= K; ++l) {
        run.B_[l] = build_B(l);
        run.T_[l] = build_T(l);
        run.y_[l] = add(P, run.B_[l], run.T_[l]);
        A[l] = scale(P, natural_projection(P, run.y_[l]), Cplx<quad>(-1));
        run.psi_[l] = solve_commutator(P, run.y_[l]);
        run.h2_[l] = off_natural(P, run.y_[l]);
    }
    run.B_[K + 1] = build_B(K + 1);
    return run;
}

NodeId GaugeRun::f(int p, const Freq& theta) const {
    if (p < 1 || p >= static_cast<int>(h2_.size())) return kZero;
    auto it = h2_[p].find(theta);
    return it == h2_[p].end() ? kZero : it->second;
}

std::vector<Freq> GaugeRun::h2_support() const {
    std::vector<Freq> out;
    for (int p = 1; p <= h2_order_; ++p)
        for (const auto& [th, n] : h2_[p])
            if (!th.is_zero()) out.push_back(th);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

GaugeRun GaugeRun::with_potential(const PotentialSpec& V) const {
    GaugeRun r = *this;
    for (const auto& f : V.support())
        require(V_.has(f), ErrorCode::domain, "with_potential: support must not grow");
    require(V.tau() == 0 || V_.tau() != 0, ErrorCode::domain,
            "with_potential: tau must be present in the original run");
    r.V_ = V;
    return r;
}

GaugeRun GaugeRun::with_zones(const ZoneSpec& z) const {
    GaugeRun r = *this;
    r.zones_ = z;
    return r;
}

NodeId extract_f(const GaugeRun& run, int p, const Freq& theta) {
    if (theta.is_zero())
        require(p >= 2 && p <= run.depth(), ErrorCode::domain, "extract_f: p out of range for theta = 0");
    else
        require(p >= 1 && p <= run.depth(), ErrorCode::domain, "extract_f: p out of range");
    return run.f(p, theta);
}

// ---------------------------------------------------------------------------

template <class T>
H2Evaluator<T>::H2Evaluator(const GaugeRun& run, int order)
    : run_(&run), order_(order > 0 ? order : run.h2_order()), cut_(run.zones().family<T>()) {
    require(order_ <= run.depth(), ErrorCode::domain, "H2Evaluator: order exceeds recursion depth");
}

template <class T>
const Program<T>& H2Evaluator<T>::program(const Freq& theta) const {
    std::lock_guard<std::mutex> lock(*mu_);
    auto it = progs_.find(theta);
    if (it != progs_.end()) return *it->second;
    std::vector<NodeId> roots;
    for (int p = 1; p <= order_; ++p) roots.push_back(run_->f(p, theta));
    auto prog = std::make_unique<Program<T>>(run_->pool(), roots, run_->potential());
    prog->set_cutoffs(cut_);
    return *progs_.emplace(theta, std::move(prog)).first->second;
}

template <class T>
void H2Evaluator<T>::orders(T xi, const Freq& theta, std::vector<Cplx<T>>& out) const {
    program(theta).eval(xi, out);
}

template <class T>
Cplx<T> H2Evaluator<T>::h2(T xi, const Freq& theta, T eps) const {
    thread_local std::vector<Cplx<T>> c;
    program(theta).eval(xi, c);
    Cplx<T> s;
    for (int p = order_; p >= 1; --p) s = (s + c[p - 1]) * eps;
    if (theta.is_zero()) s.re += xi * xi;
    return s;
}

template <class T>
Cplx<T> H2Evaluator<T>::correction(T xi, const Freq& theta, T eps) const {
    thread_local std::vector<Cplx<T>> c;
    program(theta).eval(xi, c);
    Cplx<T> s;
    for (int p = order_; p >= 2; --p) s = (s + c[p - 1]) * eps;
    s = s * eps;
    if (!theta.is_zero()) s += c[0] * eps;
    return s;
}

template class H2Evaluator<double>;
template class H2Evaluator<quad>;

// ---------------------------------------------------------------------------

namespace {

// Defects of h2 at one (theta, xi): hermitian, reflection, off-zone, first order.
struct PointDefects {
    double herm = 0, refl = 0, off = 0, first = 0;
    double worst() const { return std::max({herm, refl, off, first}); }
};

template <class T>
PointDefects point_defects(const H2Evaluator<T>& ev, const PotentialSpec& V, const Freq& th, T xi, bool even) {
    using std::abs;
    const auto& basis = *V.basis();
    const auto& cut = ev.cutoffs();
    const T tv = basis.value<T>(th);
    std::vector<Cplx<T>> a, b;
    PointDefects d;
    ev.orders(xi, th, a);
    ev.orders(xi + 2 * tv, -th, b);
    for (size_t p = 0; p < a.size(); ++p) d.herm = std::max(d.herm, static_cast<double>(abs(a[p] - b[p].conj())));
    if (even) {
        ev.orders(-xi, -th, b);
        for (size_t p = 0; p < a.size(); ++p) d.refl = std::max(d.refl, static_cast<double>(abs(a[p] - b[p])));
    }
    if (!th.is_zero()) {
        if (abs(xi + tv) >= cut.half_width(tv))
            for (const auto& c : a) d.off = std::max(d.off, static_cast<double>(abs(c)));
        const Cplx<T> vt(static_cast<T>(V.coef(th).re), static_cast<T>(V.coef(th).im));
        d.first = static_cast<double>(abs(a[0] - vt * (T(1) - cut.phi(tv, xi))));
    } else {
        d.first = static_cast<double>(abs(a[0].re - static_cast<T>(V.tau())) + abs(a[0].im));
    }
    return d;
}

// Below this a double defect is not distinguishable from rounding; above it the point is redone in quad.
constexpr double kRefine = 1e-14;

}  // namespace

GaugeCheckReport check_gauge_invariants(const GaugeRun& run, const std::vector<double>& xis) {
    GaugeCheckReport rep;
    rep.samples = static_cast<int>(xis.size());
    ExprPool& P = run.pool();
    const PotentialSpec& V = run.potential();
    const auto& basis = *V.basis();

    // Commutator equations, order by order.
    for (int j = 1; j <= run.depth(); ++j) {
        HomSymbol lhs = add(P, ad_h0(P, run.psi()[j]), natural_projection(P, run.y()[j]));
        HomSymbol scale_ref = natural_projection(P, run.y()[j]);
        std::vector<NodeId> roots, refs;
        for (const auto& [th, n] : lhs) {
            roots.push_back(n);
            auto it = scale_ref.find(th);
            refs.push_back(it == scale_ref.end() ? kZero : it->second);
        }
        if (roots.empty()) continue;
        Program<double> pr(P, roots, V), rf(P, refs, V);
        pr.set_cutoffs(run.zones().family<double>());
        rf.set_cutoffs(run.zones().family<double>());
        std::unique_ptr<Program<quad>> prq, rfq;
        for (double xi : xis) {
            auto v = pr.eval(xi);
            auto r = rf.eval(xi);
            double m = 0;
            for (size_t k = 0; k < v.size(); ++k) m = std::max(m, abs(v[k]) / std::max(1.0, abs(r[k])));
            if (m > kRefine) {
                if (!prq) {
                    prq = std::make_unique<Program<quad>>(P, roots, V);
                    rfq = std::make_unique<Program<quad>>(P, refs, V);
                    prq->set_cutoffs(run.zones().family<quad>());
                    rfq->set_cutoffs(run.zones().family<quad>());
                }
                auto vq = prq->eval(quad(xi));
                auto rq = rfq->eval(quad(xi));
                m = 0;
                for (size_t k = 0; k < vq.size(); ++k)
                    m = std::max(m, static_cast<double>(abs(vq[k]) / std::max(quad(1), abs(rq[k]))));
                ++rep.refined;
            }
            rep.cancellation_max = std::max(rep.cancellation_max, m);
        }
    }

    // V supported in Theta_L gives h2 of order p supported in Theta_{pL}.
    int LV = 1;
    for (const auto& f : V.support()) LV = std::max(LV, V.shell().order(f));
    const LatticeShell shk = build_shell(V.basis(), V.shell().theta0(), run.k_tilde() * LV);
    for (int p = 1; p <= run.depth(); ++p) {
        for (const auto& [th, n] : run.h2()[p]) {
            if (!shk.contains(th)) {
                rep.support_ok = false;
                rep.notes.push_back("h2 support outside Theta_k at " + basis.format(th));
            }
            const auto& sig = P.signature(run.y()[p].at(th));
            if (P.contains_xisq(run.y()[p].at(th)) || sig.size() != 1 || *sig.begin() != std::make_pair(p, p - 1)) {
                rep.structure_ok = false;
                rep.notes.push_back("y term shape mismatch at order " + std::to_string(p) + " " + basis.format(th));
            }
        }
    }
    std::vector<Freq> freqs{Freq::zero()};
    for (int p = 1; p <= run.depth(); ++p)
        for (const auto& [th, n] : run.h2()[p]) freqs.push_back(th);
    std::sort(freqs.begin(), freqs.end());
    freqs.erase(std::unique(freqs.begin(), freqs.end()), freqs.end());

    // Reflection xi -> -xi, theta -> -theta is a symmetry only when every V_theta is real.
    bool even = true;
    for (const auto& f : V.support()) even = even && V.coef(f).im == 0;
    rep.reflection_checked = even;

    H2Evaluator<double> ev(run, run.depth());
    H2Evaluator<quad> evq(run, run.depth());
    for (const auto& th : freqs) {
        for (double xi : xis) {
            PointDefects d = point_defects(ev, V, th, xi, even);
            if (d.worst() > kRefine) {
                d = point_defects(evq, V, th, quad(xi), even);
                ++rep.refined;
            }
            rep.hermitian_max = std::max(rep.hermitian_max, d.herm);
            rep.reflection_max = std::max(rep.reflection_max, d.refl);
            rep.off_zone_max = std::max(rep.off_zone_max, d.off);
            rep.first_order_max = std::max(rep.first_order_max, d.first);
        }
    }
    return rep;
}

NormReport verify_norm_estimates(const GaugeRun& run, double eps, const SupGrid& grid) {
    NormReport rep;
    rep.eps = eps;
    rep.V_norm = run.potential().l1_norm();
    ExprPool& P = run.pool();
    const auto cut = run.zones().family<double>();
    auto norm_of = [&](const HomSymbol& s) {
        if (s.empty()) return 0.0;
        std::vector<NodeId> roots;
        for (const auto& [th, n] : s) roots.push_back(n);
        Program<double> pr(P, roots, run.potential());
        pr.set_cutoffs(cut);
        return symbol_norm(pr, grid);
    };
    rep.psi_norm.push_back(0);
    rep.bt_norm.push_back(0);
    for (int j = 1; j <= run.depth(); ++j) {
        rep.psi_norm.push_back(norm_of(run.psi()[j]));
        rep.bt_norm.push_back(norm_of(run.B()[j]) + norm_of(run.T()[j]));
    }
    // ||y|| at eps: per frequency sup of the eps-weighted sum.
    std::map<Freq, std::vector<NodeId>> per;
    for (int p = 1; p <= run.depth(); ++p)
        for (const auto& [th, n] : run.y()[p]) {
            auto& v = per[th];
            v.resize(run.depth(), kZero);
            v[p - 1] = n;
        }
    for (const auto& [th, roots] : per) {
        Program<double> pr(P, roots, run.potential());
        pr.set_cutoffs(cut);
        double sup = 0;
        std::vector<Cplx<double>> out;
        auto visit = [&](double xi) {
            pr.eval(xi, out);
            Cplx<double> s;
            for (int p = static_cast<int>(out.size()); p >= 1; --p) s = (s + out[p - 1]) * eps;
            sup = std::max(sup, abs(s));
        };
        const long n = static_cast<long>((grid.hi - grid.lo) * grid.per_unit);
        for (long k = 0; k <= n; ++k) visit(grid.lo + (grid.hi - grid.lo) * double(k) / double(n));
        for (double x : grid.extra) visit(x);
        rep.y_norm += sup;
    }
    rep.y_ratio = rep.V_norm > 0 ? rep.y_norm / (eps * rep.V_norm) : 0;
    rep.y_bound_ok = rep.y_ratio <= 2.0;
    return rep;
}

}  // namespace qpg
