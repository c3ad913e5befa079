#include "qpg/spectral.hpp"

#include "qpg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace qpg {

namespace {

// First overlapping pair of intervals (by index) or (-1,-1).
std::pair<int, int> first_overlap(const std::vector<std::pair<quad, quad>>& iv) {
    std::vector<int> idx(iv.size());
    for (size_t k = 0; k < iv.size(); ++k) idx[k] = static_cast<int>(k);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return iv[a].first < iv[b].first; });
    int best = -1;
    for (int k : idx) {
        if (best >= 0 && iv[k].first < iv[best].second) return {best, k};
        if (best < 0 || iv[k].second > iv[best].second) best = k;
    }
    return {-1, -1};
}

}  // namespace

ZoneSet build_zones(const GeneratorBasis& basis, const std::vector<Freq>& freqs, quad width, bool check) {
    ZoneSet zs;
    using std::abs;
    for (const auto& f : freqs) {
        require(!f.is_zero(), ErrorCode::domain, "build_zones: zero frequency has no zone");
        const quad v = basis.value_q(f);
        zs.zones_.push_back({f, -v, width / (4 * abs(v))});
    }
    std::sort(zs.zones_.begin(), zs.zones_.end(),
              [](const ResonanceZone& a, const ResonanceZone& b) { return a.center < b.center; });
    if (check) {
        std::vector<std::pair<quad, quad>> wide;
        for (const auto& z : zs.zones_) wide.emplace_back(z.wide_lo(), z.wide_hi());
        auto [i, j] = first_overlap(wide);
        if (i >= 0)
            fail(ErrorCode::geometry, "wide resonance zones overlap: theta=" + basis.format(zs.zones_[i].theta) +
                                          " and theta=" + basis.format(zs.zones_[j].theta) +
                                          " (shrink delta or raise P)");
    }
    for (const auto& z : zs.zones_) zs.lo_d_.push_back(static_cast<double>(z.lo()));
    return zs;
}

template <class T>
int ZoneSet::locate(T xi) const {
    if (zones_.empty()) return -1;
    // Last zone whose centre is <= xi, then its right neighbour.
    auto it = std::upper_bound(zones_.begin(), zones_.end(), xi,
                               [](const T& x, const ResonanceZone& z) { return x < static_cast<T>(z.center); });
    const int k = static_cast<int>(it - zones_.begin());
    for (int c : {k - 1, k}) {
        if (c < 0 || c >= static_cast<int>(zones_.size())) continue;
        const auto& z = zones_[c];
        if (xi > static_cast<T>(z.lo()) && xi < static_cast<T>(z.hi())) return c;
    }
    return -1;
}

template int ZoneSet::locate<double>(double) const;
template int ZoneSet::locate<quad>(quad) const;

int ZoneSet::locate_linear(double xi) const {
    for (size_t k = 0; k < zones_.size(); ++k)
        if (xi > static_cast<double>(zones_[k].lo()) && xi < static_cast<double>(zones_[k].hi()))
            return static_cast<int>(k);
    return -1;
}

int ZoneSet::index_of(const Freq& theta) const {
    for (size_t k = 0; k < zones_.size(); ++k)
        if (zones_[k].theta == theta) return static_cast<int>(k);
    return -1;
}

quad ZoneSet::measure() const {
    quad s = 0;
    for (const auto& z : zones_) s += 2 * z.half_width;
    return s;
}

quad default_delta(const LatticeShell& shell9N) {
    const auto freqs = shell9N.nonzero_members(shell9N.L());
    quad w = 1;
    for (int it = 0; it < 400; ++it, w /= 2) {
        try {
            build_zones(*shell9N.basis(), freqs, w, true);
            return w / 2;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::geometry) throw;
        }
    }
    fail(ErrorCode::geometry, "default_delta: no dyadic width separates the zones");
}

quad default_delta(BasisPtr basis, const std::vector<Freq>& theta0, int N) {
    return default_delta(build_shell(std::move(basis), theta0, 9 * N));
}

template <class T>
std::pair<T, T> sigma_pm(const ResonanceLocalData<T>& d) {
    using std::sqrt;
    const T base = d.zeta * d.zeta + d.theta0 * d.theta0 + d.mu + d.s;
    const T x = 2 * d.zeta * d.theta0 - d.t;
    const Cplx<T> off = d.nu * d.eps + d.g;
    const T r = sqrt(x * x + off.norm2());
    return {base - r, base + r};
}

template std::pair<double, double> sigma_pm<double>(const ResonanceLocalData<double>&);
template std::pair<quad, quad> sigma_pm<quad>(const ResonanceLocalData<quad>&);

template <class T>
std::pair<T, T> FiberMatrix<T>::eigenvalues() const {
    using std::sqrt;
    const T m = (a + d) / 2, h = (a - d) / 2;
    const T r = sqrt(h * h + b.norm2());
    return {m - r, m + r};
}

template struct FiberMatrix<double>;
template struct FiberMatrix<quad>;

template <class T>
SpectralMap<T>::SpectralMap(const GaugeRun& run, T eps, int order) : run_(&run), ev_(run, order), eps_(eps) {
    std::vector<Freq> freqs;
    for (int p = 1; p <= ev_.order(); ++p)
        for (const auto& [th, n] : run.h2()[p])
            if (!th.is_zero()) freqs.push_back(th);
    std::sort(freqs.begin(), freqs.end());
    freqs.erase(std::unique(freqs.begin(), freqs.end()), freqs.end());
    zones_ = build_zones(*run.potential().basis(), freqs, run.zones().width, false);
}

template <class T>
T SpectralMap<T>::diag(T xi) const {
    return ev_.h2(xi, Freq::zero(), eps_).re;
}

template <class T>
FiberMatrix<T> SpectralMap<T>::fiber(T xi, const Freq& theta0) const {
    const T th = run_->potential().basis()->template value<T>(theta0);
    FiberMatrix<T> m;
    m.a = diag(xi);
    m.d = diag(xi - 2 * th);
    m.b = ev_.h2(xi, -theta0, eps_);
    m.c = ev_.h2(xi - 2 * th, theta0, eps_);
    return m;
}

template <class T>
ResonanceLocalData<T> SpectralMap<T>::local_data(const Freq& theta0, T zeta) const {
    ResonanceLocalData<T> d;
    d.theta0 = run_->potential().basis()->template value<T>(theta0);
    d.zeta = zeta;
    d.eps = eps_;
    d.mu = eps_ * static_cast<T>(run_->potential().tau());
    d.nu = Cplx<T>(run_->potential().coef(theta0));
    const T fm = ev_.correction(zeta - d.theta0, Freq::zero(), eps_).re;
    const T fp = ev_.correction(zeta + d.theta0, Freq::zero(), eps_).re;
    d.s = (fm + fp) / 2;
    d.t = (fm - fp) / 2;
    d.g = ev_.h2(zeta + d.theta0, -theta0, eps_) - d.nu * eps_;
    return d;
}

template <class T>
std::pair<T, T> SpectralMap<T>::sigma(const Freq& theta0, T zeta) const {
    return sigma_pm(local_data(theta0, zeta));
}

template <class T>
T SpectralMap<T>::G(T xi) const {
    const int z = zones_.locate(xi);
    if (z < 0) return diag(xi);
    const Freq theta0 = -zones_.zones()[z].theta;
    const auto [l1, l2] = fiber(xi, theta0).eigenvalues();
    return xi > 0 ? l2 : l1;
}

template class SpectralMap<double>;
template class SpectralMap<quad>;

}  // namespace qpg
