#include "qpg/potential.hpp"

#include "qpg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace qpg {

namespace {

uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

bool canonical(const Freq& f) {
    for (auto v : f.c)
        if (v != 0) return v > 0;
    return false;
}

quad phase_of(const Freq& f, uint64_t seed) {
    uint64_t h = splitmix(seed);
    for (auto v : f.c) h = splitmix(h ^ static_cast<uint32_t>(v));
    const quad u = quad(h >> 11) / quad(uint64_t(1) << 53);
    return 2 * pi_of<quad>() * u;
}

}  // namespace

void PotentialSpec::finalize() {
    support_.clear();
    tau_ = 0;
    for (auto it = coeffs_.begin(); it != coeffs_.end();) {
        if (it->second.re == 0 && it->second.im == 0) {
            it = coeffs_.erase(it);
            continue;
        }
        ++it;
    }
    for (const auto& [f, v] : coeffs_) {
        if (f.is_zero()) {
            require(v.im == 0, ErrorCode::config, "tau = V_0 must be real");
            tau_ = v.re;
        } else {
            support_.push_back(f);
        }
    }
    std::sort(support_.begin(), support_.end());
    require(l2_norm() < 0.01, ErrorCode::config,
            "potential: ||V||_2 = " + std::to_string(l2_norm()) + " must be below 1/100");
}

PotentialSpec PotentialSpec::from_coefficients(BasisPtr basis, const std::vector<Freq>& theta0,
                                               const std::vector<CoefEntry>& entries) {
    // Provisional shell to learn orders; rebuilt at the maximal order afterwards.
    int maxL = 0;
    PotentialSpec p;
    FreqMap<Cplx<quad>> tmp;
    for (const auto& e : entries) {
        require(tmp.emplace(e.theta, e.value).second, ErrorCode::config,
                "coefficients: duplicate frequency " + basis->format(e.theta));
    }
    for (const auto& [f, v] : tmp) {
        auto it = tmp.find(-f);
        if (it == tmp.end()) continue;
        using std::abs;
        const quad scale = 1 + abs(v.re) + abs(v.im);
        require(abs(it->second.re - v.re) <= 1e-15 * scale && abs(it->second.im + v.im) <= 1e-15 * scale,
                ErrorCode::config,
                "coefficients: V_{-theta} must equal conj(V_theta) at " + basis->format(f));
    }
    for (const auto& [f, v] : tmp) {
        p.coeffs_[f] = v;
        if (!tmp.count(-f)) p.coeffs_[-f] = v.conj();
        maxL = std::max(maxL, f.l1());
    }
    // Orders over the standard Theta are the l1 norms; the shell verifies membership.
    p.shell_ = build_shell(std::move(basis), theta0, std::max(maxL, 1));
    for (const auto& [f, v] : p.coeffs_)
        require(p.shell_.contains(f), ErrorCode::config, "coefficient frequency outside shell");
    int used = 0;
    for (const auto& [f, v] : p.coeffs_) used = std::max(used, p.shell_.order(f));
    if (used != p.shell_.L()) p.shell_ = build_shell(p.shell_.basis(), theta0, std::max(used, 1));
    p.finalize();
    return p;
}

PotentialSpec PotentialSpec::from_decay(BasisPtr basis, const std::vector<Freq>& theta0,
                                        const DecayRule& rule, double tau, int L, size_t cap) {
    require(rule.C > 0 && rule.P > 0, ErrorCode::config, "decay: C and P must be positive");
    require(L >= 1, ErrorCode::config, "decay: enumeration level must be at least 1");
    PotentialSpec p;
    p.shell_ = build_shell(std::move(basis), theta0, L, cap);
    p.decay_ = rule;
    using std::cos;
    using std::pow;
    using std::sin;
    for (const auto& f : p.shell_.members()) {
        if (f.is_zero()) continue;
        const int z = p.shell_.order(f);
        const quad mag = quad(rule.C) * pow(quad(z), -quad(rule.P));
        const quad a = canonical(f) ? phase_of(f, rule.seed) : -phase_of(-f, rule.seed);
        p.coeffs_[f] = Cplx<quad>(mag * cos(a), mag * sin(a));
    }
    if (tau != 0) p.coeffs_[Freq::zero()] = Cplx<quad>(quad(tau), 0);
    p.finalize();
    return p;
}

Cplx<quad> PotentialSpec::coef(const Freq& f) const {
    auto it = coeffs_.find(f);
    return it == coeffs_.end() ? Cplx<quad>() : it->second;
}

bool PotentialSpec::is_periodic() const {
    int nz = -1;
    for (const auto& f : support_)
        for (int i = 0; i < kMaxGenerators; ++i)
            if (f.c[i] != 0) {
                if (nz >= 0 && nz != i) return false;
                nz = i;
            }
    return true;
}

double PotentialSpec::l2_norm() const {
    quad s = 0;
    for (const auto& [f, v] : coeffs_) s += v.norm2();
    using std::sqrt;
    return static_cast<double>(sqrt(s));
}

double PotentialSpec::l1_norm() const {
    quad s = 0;
    for (const auto& [f, v] : coeffs_) s += abs(v);
    return static_cast<double>(s);
}

template <class T>
T PotentialSpec::evaluate(T x) const {
    using std::cos;
    using std::sin;
    T re = static_cast<T>(tau_), im = 0;
    for (const auto& f : support_) {
        const Cplx<T> v(coef(f));
        const T arg = 2 * basis()->value<T>(f) * x;
        const T c = cos(arg), s = sin(arg);
        re += v.re * c - v.im * s;
        im += v.re * s + v.im * c;
    }
    using std::abs;
    if (abs(im) > T(kImagTolerance))
        fail(ErrorCode::consistency, "potential evaluation has imaginary residue " +
                                         std::to_string(static_cast<double>(im)));
    return re;
}

template double PotentialSpec::evaluate<double>(double) const;
template quad PotentialSpec::evaluate<quad>(quad) const;

PotentialSpec PotentialSpec::truncate(int L) const {
    require(L >= 0, ErrorCode::domain, "truncate: L must be non-negative");
    PotentialSpec p = *this;
    for (auto it = p.coeffs_.begin(); it != p.coeffs_.end();) {
        if (shell_.order(it->first) > L)
            it = p.coeffs_.erase(it);
        else
            ++it;
    }
    p.shell_ = build_shell(basis(), shell_.theta0(), std::max(L, 1));
    p.finalize();
    return p;
}

PotentialSpec PotentialSpec::without_tau() const { return with_tau(0); }

PotentialSpec PotentialSpec::with_tau(quad tau) const {
    PotentialSpec p = *this;
    p.coeffs_.erase(Freq::zero());
    if (tau != 0) p.coeffs_[Freq::zero()] = Cplx<quad>(tau, 0);
    p.finalize();
    return p;
}

PotentialSpec PotentialSpec::scaled(quad s) const {
    PotentialSpec p = *this;
    for (auto& [f, v] : p.coeffs_) v *= s;
    p.finalize();
    return p;
}

double PotentialSpec::tail_bound(int L, int enumerated) const {
    if (!decay_) {
        double s = 0;
        for (const auto& f : support_)
            if (shell_.order(f) > L) s += static_cast<double>(abs(coef(f)));
        return s;
    }
    const double C = decay_->C, P = decay_->P;
    const int l = dim();
    if (enumerated < 0) enumerated = shell_.L();
    double s = 0;
    int z = L + 1;
    for (; z <= enumerated; ++z) s += shell_.members_of_order(z).size() * C * std::pow(z, -P);
    // (3z)^{3l} C z^{-P}: summed explicitly, then closed by the integral bound.
    const double e = P - 3.0 * l;
    require(e > 1, ErrorCode::domain, "tail_bound: decay exponent too small for convergence");
    const double k = std::pow(3.0, 3.0 * l) * C;
    const int stop = z + 100000;
    for (; z < stop; ++z) s += k * std::pow(double(z), -e);
    s += k * std::pow(double(stop - 1), 1 - e) / (e - 1);
    return s;
}

uint64_t PotentialSpec::hash() const {
    std::vector<std::pair<Freq, Cplx<quad>>> items(coeffs_.begin(), coeffs_.end());
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    uint64_t h = 0x1234567ull;
    for (const auto& g : basis()->gens())
        for (char ch : g.exact) h = splitmix(h ^ static_cast<unsigned char>(ch));
    for (const auto& [f, v] : items) {
        for (auto c : f.c) h = splitmix(h ^ static_cast<uint32_t>(c));
        const double re = static_cast<double>(v.re), im = static_cast<double>(v.im);
        uint64_t bits;
        std::memcpy(&bits, &re, 8);
        h = splitmix(h ^ bits);
        std::memcpy(&bits, &im, 8);
        h = splitmix(h ^ bits);
    }
    return h;
}

}  // namespace qpg
