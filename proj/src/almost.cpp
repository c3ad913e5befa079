#include "qpg/almost.hpp"

#include "qpg/errors.hpp"

#include "json.hpp"

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace qpg {

namespace {

using boost::multiprecision::mpz_int;
using mp = boost::multiprecision::mpfr_float;

// ---------------------------------------------------------------- schedule helpers

struct Gen2 {
    double g0 = 1, g1 = 0;
};

Gen2 gens2(const GeneratorBasis& b) { return {b.gen(0).value_d, b.gen(1).value_d}; }

// min |a g0 + b g1| over 0 < |a|+|b| <= Z
double min_abs(const Gen2& g, long long Z) {
    double best = std::numeric_limits<double>::infinity();
    for (long long b = -Z; b <= Z; ++b) {
        const long long room = Z - std::llabs(b);
        const double target = -static_cast<double>(b) * g.g1 / g.g0;
        long long a = std::llround(target);
        for (long long aa : {a - 1, a, a + 1}) {
            if (std::llabs(aa) > room || (aa == 0 && b == 0)) continue;
            best = std::min(best, std::abs(aa * g.g0 + b * g.g1));
        }
        if (room >= 0 && std::llabs(a) > room) {
            const long long ae = a > 0 ? room : -room;
            if (!(ae == 0 && b == 0)) best = std::min(best, std::abs(ae * g.g0 + b * g.g1));
        }
    }
    return best;
}

// Upper bound on sum over nonzero theta with Z(theta) <= Z of 1/|theta|.
double inverse_sum_bound(const Gen2& g, long long Z) {
    const double step = std::abs(g.g0);
    double harmonic = 0;
    for (long long k = 1; k <= 2 * Z + 1; ++k) harmonic += 1.0 / static_cast<double>(k);
    double total = 0;
    for (long long b = -Z; b <= Z; ++b) {
        const double x0 = b * g.g1;
        // points x0 + a g0; nearest on each side of zero
        const double r = std::fmod(x0, step);
        double mp_ = r >= 0 ? r : r + step;   // distance to nearest point >= 0
        double mm_ = step - mp_;              // distance to nearest point < 0
        if (b == 0) {
            mp_ = step;
            mm_ = step;
        }
        if (mp_ > 0) total += 1.0 / mp_;
        if (mm_ > 0) total += 1.0 / mm_;
        total += 2.0 * harmonic / step;
    }
    return total;
}

bool is_standard_theta0(const std::vector<Freq>& t, int dim) {
    auto a = t, b = standard_theta0(dim);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

}  // namespace

double minimal_smoothness_P(int N, double P0) { return 24.0 * N * P0; }

quad DyadicSchedule::eps(int n) const { return boost::multiprecision::ldexp(p_.eps0, -n); }

long long DyadicSchedule::L_tilde(int n) const {
    const quad q = quad(2 * p_.N) / quad(p_.P);
    const quad v = boost::multiprecision::pow(eps(n), -q);
    return static_cast<long long>(boost::multiprecision::ceil(v - quad(1e-25) * v));
}

quad DyadicSchedule::zone_width(int n) const { return boost::multiprecision::sqrt(eps(n)); }

DyadicSchedule build_schedule(BasisPtr basis, const std::vector<Freq>& theta0, const ScheduleParams& p) {
    require(p.N >= 1, ErrorCode::config, "schedule: N must be positive");
    require(p.P > 0 && p.P0 > 0, ErrorCode::config, "schedule: P and P0 must be positive");
    require(p.eps0 > 0, ErrorCode::config, "schedule: eps0 must be positive");
    const double s = 3.0 * p.N * p.P0 / p.P;
    if (!(s < 0.125)) {
        std::ostringstream os;
        os << "schedule: smoothness condition 3 N P0 / P < 1/8 fails (3*" << p.N << "*" << p.P0 << "/" << p.P
           << " = " << s << "); minimal P is any value above " << minimal_smoothness_P(p.N, p.P0);
        throw Error(ErrorCode::config, os.str());
    }
    DyadicSchedule out;
    out.p_ = p;
    out.basis_ = basis;
    out.theta0_ = theta0;
    if (basis->dim() != 2 || !is_standard_theta0(theta0, 2)) return out;
    const Gen2 g = gens2(*basis);
    for (int n = 0; n <= p.n_max; ++n) {
        WindowCheck w;
        w.n = n;
        w.eps = out.eps(n);
        w.L_tilde = out.L_tilde(n);
        w.max_order = 3LL * p.N * w.L_tilde;
        w.zone_width = out.zone_width(n);
        w.min_theta = min_abs(g, w.max_order);
        w.min_separation = min_abs(g, 2 * w.max_order);
        const double zw = static_cast<double>(w.zone_width);
        w.max_zone_length = zw / (2 * w.min_theta);
        // two half-widths of the widest zones against the closest pair of centres
        w.disjoint = w.max_zone_length < w.min_separation;
        w.measure_bound = zw / 2 * inverse_sum_bound(g, w.max_order);
        w.measure_cap = std::pow(static_cast<double>(w.eps), 1.0 / 6);
        w.measure_ok = w.measure_bound < w.measure_cap;
        out.windows_.push_back(w);
    }
    return out;
}

DyadicSchedule build_schedule(const PotentialSpec& V, int N, double P0, quad eps0, int n_max) {
    require(V.decay().has_value(), ErrorCode::config, "schedule: potential has no decay rule (C, P)");
    ScheduleParams p;
    p.N = N;
    p.P = V.decay()->P;
    p.P0 = P0;
    p.C = V.decay()->C;
    p.eps0 = eps0;
    p.n_max = n_max;
    return build_schedule(V.basis(), V.shell().theta0(), p);
}

GaugeRun run_window(const DyadicSchedule& s, int n, const PotentialSpec& V, const GaugeOptions& opt,
                    Mollifier mollifier) {
    require(n >= 0, ErrorCode::domain, "run_window: negative window index");
    const long long L = s.L_tilde(n);
    PotentialSpec W = V;
    if (V.decay()) {
        require(L <= 64, ErrorCode::domain,
                "run_window: truncation level " + std::to_string(L) + " is beyond desk scale");
        W = PotentialSpec::from_decay(V.basis(), V.shell().theta0(), *V.decay(), static_cast<double>(V.tau()),
                                      static_cast<int>(L));
    }
    ZoneSpec z;
    z.width = s.zone_width(n);
    z.mollifier = mollifier;
    GaugeOptions o = opt;
    o.N = s.params().N;
    return run_gauge(W, z, o);
}

// ---------------------------------------------------------------- super-resonance search

namespace {

// a + b sqrt(d)
struct QElem {
    mpz_int a = 0, b = 0;
};

QElem mul(const QElem& x, const QElem& y, long d) {
    return {x.a * y.a + d * x.b * y.b, x.a * y.b + x.b * y.a};
}

QElem pow_elem(QElem base, unsigned long long k, long d) {
    QElem r{1, 0};
    while (k) {
        if (k & 1) r = mul(r, base, d);
        k >>= 1;
        if (k) base = mul(base, base, d);
    }
    return r;
}

mpz_int order_of(const QElem& e) { return abs(e.a) + abs(e.b); }

std::string dec(const mp& x, int digits = 40) { return x.str(digits, std::ios_base::scientific); }

// Smallest solution of x^2 - d y^2 = +-1 from the continued fraction of sqrt(d).
QElem fundamental_unit(long d, int& norm) {
    const long a0 = static_cast<long>(std::floor(std::sqrt(static_cast<double>(d))));
    long m = 0, den = 1, a = a0;
    mpz_int p0 = 1, p1 = a0, q0 = 0, q1 = 1;
    for (int it = 0; it < 10000; ++it) {
        const mpz_int nv = p1 * p1 - d * q1 * q1;
        if (nv == 1 || nv == -1) {
            norm = static_cast<int>(nv);
            return {p1, q1};
        }
        m = den * a - m;
        den = (d - m * m) / den;
        a = (a0 + m) / den;
        const mpz_int p2 = a * p1 + p0, q2 = a * q1 + q0;
        p0 = p1;
        p1 = p2;
        q0 = q1;
        q1 = q2;
    }
    throw Error(ErrorCode::numeric, "superres: no Pell unit found");
}

struct Stage {
    QElem theta;     // theta_j (negative value)
    mpz_int Z;
    mp c;            // centre -theta_j
    mp eta;          // c_j - c_{j-1} (0 for j = 1)
    mp V;            // |V_theta_j|
    long long n = 0, k = 0, k_tilde = 0, n_prime = 0;
    mp delta;
    mp r;            // eta - (shift centring the previous stage), tau != 0
};

class Search {
public:
    Search(const DyadicSchedule& s, const PotentialSpec& V, const SuperResonanceOptions& opt)
        : s_(s), V_(V), opt_(opt) {
        const auto& B = *V.basis();
        require(B.dim() >= 2, ErrorCode::domain, "superres: potential is periodic (one generator)");
        require(B.dim() == 2 && B.gen(0).exact == "1" && B.gen(1).exact.rfind("sqrt:", 0) == 0 &&
                    is_standard_theta0(V.shell().theta0(), 2),
                ErrorCode::domain, "superres: basis must be (1, sqrt d) with the standard generating set");
        d_ = std::stol(B.gen(1).exact.substr(5));
        const long r = static_cast<long>(std::llround(std::sqrt(static_cast<double>(d_))));
        require(d_ > 1 && r * r != d_, ErrorCode::domain, "superres: sqrt d must be irrational");
        require(V.decay().has_value(), ErrorCode::domain, "superres: potential needs a decay rule");
        C_ = mp(V.decay()->C);
        P_ = mp(V.decay()->P);
        tau_ = mp(static_cast<double>(V.tau()));
        const auto& p = s.params();
        threeN_ = 3 * p.N;
        q_ = mp(2 * p.N) / P_;
        eps0_ = mp(static_cast<double>(p.eps0));
        {
            // exact decimal of eps0
            std::ostringstream os;
            os.precision(40);
            os << p.eps0;
            eps0_text_ = os.str();
            eps0_ = mp(eps0_text_);
        }
        sqrtd_ = sqrt(mp(d_));
        unit_ = fundamental_unit(d_, unit_norm_);
        nu_ = 1 / (mp(unit_.a) + mp(unit_.b) * sqrtd_);  // |u bar|
        ubar_ = {unit_.a, -unit_.b};
    }

    mp eps(long long n) const { return ldexp(eps0_, static_cast<int>(-std::min<long long>(n, INT32_MAX))); }
    mp eps_big(long long n) const {
        // ldexp may overflow int for enormous n; split the shift
        mp e = eps0_;
        while (n > 0) {
            const long long step = std::min<long long>(n, 1LL << 30);
            e = ldexp(e, static_cast<int>(-step));
            n -= step;
        }
        return e;
    }
    // 3N L_tilde(n)
    mp max_order(long long n) const { return threeN_ * ceil(pow(eps_big(n), -q_)); }
    // first n with 3N L_tilde(n) >= Z
    long long first_window(const mpz_int& Z) const {
        const mpz_int need = (Z + threeN_ - 1) / threeN_;  // L_tilde >= need
        if (need <= 1) return 0;
        const mp m = mp(need - 1);                      // eps_n^-q > m
        const mp x = log(m) / (q_ * log(mp(2))) + log(eps0_) / log(mp(2));
        long long n = static_cast<long long>(floor(x)) + 1;
        n = std::max<long long>(n, 0);
        while (n > 0 && mp(Z) <= max_order(n - 1)) --n;
        while (mp(Z) > max_order(n)) ++n;
        return n;
    }
    mp value(const QElem& e) const { return mp(e.a) + mp(e.b) * sqrtd_; }
    mp coef(const mpz_int& Z) const { return C_ * pow(mp(Z), -P_); }

    QElem first_theta(long long& n1) {
        long long n = 1;
        while (max_order(n) <= max_order(n - 1)) ++n;
        n1 = n;
        const mpz_int lo = mpz_int(static_cast<long long>(max_order(n - 1))) + 1;
        const double mid = 0.5 * (opt_.xi_lo + opt_.xi_hi);
        const double sq = std::sqrt(static_cast<double>(d_));
        for (mpz_int Z = lo;; ++Z) {
            const long long z = static_cast<long long>(Z);
            double best = std::numeric_limits<double>::infinity();
            QElem pick;
            for (long long b = -z; b <= z; ++b) {
                const long long room = z - std::llabs(b);
                for (long long a : {room, -room}) {
                    const double v = a + b * sq;
                    if (v > opt_.xi_lo + 0.05 && v < opt_.xi_hi - 0.05 && std::abs(v - mid) < best) {
                        best = std::abs(v - mid);
                        pick = {a, b};
                    }
                }
            }
            if (best < std::numeric_limits<double>::infinity()) return {-pick.a, -pick.b};
        }
    }

    void fill_stage(Stage& st) {
        st.Z = order_of(st.theta);
        st.n = first_window(st.Z);
        st.k = st.n - 1;
        st.V = coef(st.Z);
        const mp e = eps_big(st.n);
        st.delta = std::min<mp>(e * st.V / (100 * st.c), st.V * st.V / (72 * st.c * st.c));
    }

    // Next stage displacement: c_{j+1} = c_j + eta, theta_{j+1} = theta_j - S.
    QElem displacement(const Stage& prev, mp& eta, mp& r) {
        const mp tol = prev.delta / 4;
        if (tau_ == 0) {
            const long long k = static_cast<long long>(ceil(log(tol) / log(nu_))) + 1;
            // element with value +nu^k
            QElem e = pow_elem(ubar_, static_cast<unsigned long long>(k), d_);
            if (unit_norm_ == -1 && (k & 1)) e = {-e.a, -e.b};
            eta = pow(nu_, k);
            r = 0;
            return e;
        }
        // tau != 0: the shift that keeps the previous stage centred once the next window's eps
        // is negligible, rounded to an integer multiple of one unit power: S = m ubar^k with
        // nu^k <= tol, so |value(S) - target| <= nu^k / 2.
        const mp e_prev = eps_big(prev.n);
        const mp target = -tau_ * e_prev / (sqrt(prev.c * prev.c - tau_ * e_prev) + prev.c);
        const long long k = static_cast<long long>(ceil(log(tol) / log(nu_))) + 1;
        const long bits = std::max<long>(
            256, static_cast<long>(boost::multiprecision::log2(abs(target) / tol)) + 128);
        // c_j and eps_{n_j} enter the target with relative weight 1, so both are rebuilt from
        // exact data at the working precision
        const unsigned saved = mp::default_precision();
        const QElem P = pow_elem(ubar_, static_cast<unsigned long long>(k), d_);
        const long theta_bits = coef_bits(prev.theta);
        const unsigned work = static_cast<unsigned>((bits + theta_bits) * 0.30103) + 10;
        mp::default_precision(work);
        const mp t = exact_target(prev, work);
        const mp nu = 1 / (mp(unit_.a, work) + mp(unit_.b, work) * sqrt(mp(d_, work)));
        mp scaled = t / pow(nu, k);
        if (unit_norm_ == -1 && (k & 1)) scaled = -scaled;
        const mpz_int m = static_cast<mpz_int>(round(scaled));
        const QElem S{m * P.a, m * P.b};
        // a + b sqrt(d) cancels down to |value| ~ |target|: carry the coefficient size on top
        const long abs_bits = static_cast<long>(-boost::multiprecision::log2(tol)) + 128;
        const unsigned wide =
            std::max<unsigned>(work, static_cast<unsigned>((coef_bits(S) + abs_bits) * 0.30103) + 10);
        mp::default_precision(wide);
        const mp v = mp(S.a, wide) + mp(S.b, wide) * sqrt(mp(d_, wide));
        const mp rw = v - mp(t, wide);
        mp::default_precision(saved);
        eta = mp(v, saved);
        r = mp(rw, saved);
        return S;
    }

    static long coef_bits(const QElem& e) {
        return static_cast<long>(std::max(msb(abs(e.a) + 1), msb(abs(e.b) + 1))) + 1;
    }
    // -tau eps_{n_j} / (sqrt(c_j^2 - tau eps_{n_j}) + c_j) with c_j from its exact coefficients
    mp exact_target(const Stage& st, unsigned digits) const {
        const mp sd = sqrt(mp(d_, digits));
        const mp c = -(mp(st.theta.a, digits) + mp(st.theta.b, digits) * sd);
        mp e(eps0_text_, digits);
        long long n = st.n;
        while (n > 0) {
            const long long step = std::min<long long>(n, 1LL << 30);
            e = ldexp(e, static_cast<int>(-step));
            n -= step;
        }
        const mp tau(tau_, digits);
        return -tau * e / (sqrt(c * c - tau * e) + c);
    }

    // point at window n: xi for tau = 0, sqrt(xi^2 + tau eps_n) otherwise; returned as offset
    // from xi
    mp shift(long long n) const {
        if (tau_ == 0) return 0;
        const mp e = eps_big(n);
        const mp x = sqrt(xi_ * xi_ + tau_ * e);
        return tau_ * e / (x + xi_);
    }
    // (point at window n) - c_i
    // Evaluated from the stage's own window without cancelling the eps_{n_i} terms.
    mp dist(size_t i, long long n) const {
        if (tau_ == 0) return off_[i];
        const mp ei = eps_big(st_[i].n), en = eps_big(n);
        const mp xi_n = sqrt(xi_ * xi_ + tau_ * ei);
        if (n == st_[i].n) return base_[i];
        const mp x_n = sqrt(xi_ * xi_ + tau_ * en);
        return base_[i] + tau_ * (en - ei) / (x_n + xi_n);
    }

    bool present(size_t i, long long n) const { return mp(st_[i].Z) <= max_order(n); }

    // point at window n lies outside every zone of the window; width factor 2 for R'
    bool clear(long long n, int width_factor, bool use_lambda = false) const {
        const mp e = eps_big(n);
        const mp hw = width_factor * sqrt(e) / 4;
        const mp x = xi_ + (use_lambda ? mp(0) : shift(n));
        for (size_t i = 0; i < st_.size(); ++i) {
            if (!present(i, n)) continue;
            const mp di = use_lambda ? off_[i] : dist(i, n);
            if (abs(di) < hw / st_[i].c) return false;
        }
        const mp Zmax = max_order(n);
        if (x / 2 < hw * sqrtd_ * Zmax) return false;
        mp g = -1;
        for (size_t i = 0; i < st_.size(); ++i) {
            const mp di = use_lambda ? off_[i] : dist(i, n);
            g = std::max<mp>(g, 1 / (sqrtd_ * (Zmax + mp(st_[i].Z))) - abs(di));
        }
        return g > 0 && g >= 2 * hw / x;
    }

    // sum over theta in Theta'_{max_order(n)} of |V|^2 / ((xi + 2 theta)^2 - xi^2), plus
    // a bound on the part not summed explicitly
    std::pair<mp, mp> f2_sum(long long n) const {
        const mp Zmax = max_order(n);
        const long long Ze = std::min<long long>(opt_.enumerate_order, static_cast<long long>(Zmax));
        mp sum = 0;
        for (long long z = 1; z <= Ze; ++z) {
            const mp V2 = pow(C_ * pow(mp(z), -P_), 2);
            for (long long b = -z; b <= z; ++b) {
                const long long room = z - std::llabs(b);
                for (int sgn = 1; sgn >= (room == 0 ? 1 : -1); sgn -= 2) {
                    const long long a = sgn * room;
                    const mp th = mp(a) + mp(b) * sqrtd_;
                    sum += V2 / (4 * th * (xi_ + th));
                }
            }
        }
        for (size_t i = 0; i < st_.size(); ++i) {
            if (!present(i, n)) continue;
            // theta_i = -c_i, xi + theta_i = off_i
            sum += st_[i].V * st_[i].V / (4 * (-st_[i].c) * off_[i]);
        }
        // tail: orders Ze < Z <= Zmax excluding the trace, anchored on the trace separation
        mp bound = 0;
        mp A = mp(Ze + 1);
        const mp s2 = 2 * P_ - 2, s1 = 2 * P_ - 1;  // exponents of Z^{2-2P}, Z^{1-2P}
        auto tail = [&](const mp& A0, const mp& s) { return pow(A0, -s) + pow(A0, 1 - s) / (s - 1); };
        std::vector<size_t> idx(st_.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        for (size_t i : idx) {
            if (A > Zmax) break;
            const mp cap = 1 / (2 * sqrtd_ * abs(off_[i])) - mp(st_[i].Z);
            if (cap < A) continue;
            bound += (4 * C_ * C_ * sqrtd_ / xi_) * (tail(A, s2) + mp(st_[i].Z) * tail(A, s1));
            A = floor(cap) + 1;
        }
        if (A <= Zmax) bound = std::numeric_limits<double>::infinity();
        return {sum, bound};
    }

    SuperResonanceCandidate run() {
        const auto t0 = std::chrono::steady_clock::now();
        SuperResonanceCandidate out;
        out.d = static_cast<int>(d_);
        out.depth = opt_.depth;
        out.N = s_.params().N;
        out.tau = V_.tau();
        require(opt_.depth >= 1, ErrorCode::config, "superres: depth must be at least 1");

        long long n1 = 0;
        Stage first;
        first.theta = first_theta(n1);
        first.c = -value(first.theta);
        first.eta = 0;
        fill_stage(first);
        st_.push_back(first);
        for (int j = 1; j < opt_.depth; ++j) {
            Stage next;
            mp eta;
            mp r;
            const QElem S = displacement(st_.back(), eta, r);
            st_.back().r = r;
            next.theta = {st_.back().theta.a - S.a, st_.back().theta.b - S.b};
            next.eta = eta;
            next.c = st_.back().c + eta;
            fill_stage(next);
            st_.push_back(next);
        }
        // the point
        const size_t J = st_.size() - 1;
        mp rho;
        if (tau_ == 0) {
            rho = st_[J].delta / 2;
        } else {
            const mp e = eps_big(st_[J].n);
            rho = -tau_ * e / (sqrt(st_[J].c * st_[J].c - tau_ * e) + st_[J].c);
        }
        xi_ = st_[J].c + rho;
        off_.assign(st_.size(), 0);
        for (size_t i = st_.size(); i-- > 0;) off_[i] = (i == J) ? rho : off_[i + 1] + st_[i + 1].eta;
        base_.assign(st_.size(), 0);
        for (size_t i = 0; i < st_.size(); ++i) {
            if (tau_ == 0) {
                base_[i] = off_[i];
                continue;
            }
            // x_{n_i} - c_i = (xi - A_i)(xi + A_i) / (x_{n_i} + c_i), A_i = sqrt(c_i^2 - tau eps_{n_i})
            const mp e = eps_big(st_[i].n);
            const mp A = sqrt(st_[i].c * st_[i].c - tau_ * e);
            const mp x = sqrt(xi_ * xi_ + tau_ * e);
            const mp u = (i == J) ? mp(0) : off_[i + 1] + st_[i].r;
            base_[i] = u * (xi_ + A) / (x + st_[i].c);
        }

        out.xi_star_decimal = dec(xi_);
        out.xi_offset = dec(rho);
        out.lambda_decimal = dec(xi_ * xi_);
        out.complete = true;
        for (size_t i = 0; i < st_.size(); ++i) {
            Stage& s = st_[i];
            const mp e = eps_big(s.n);
            const mp hw_n = sqrt(e) / (4 * s.c);
            TraceStage t;
            t.j = static_cast<int>(i) + 1;
            t.theta_a = s.theta.a.str();
            t.theta_b = s.theta.b.str();
            t.order = s.Z.str();
            t.n = s.n;
            t.k = s.k;
            t.center = dec(s.c);
            t.delta = dec(s.delta);
            t.distance = dec(dist(i, s.n));
            t.inside_R = s.delta <= hw_n;
            t.condition_a = abs(dist(i, s.n)) < s.delta && present(i, s.n) && !present(i, s.k);
            // exit window of R(theta_j): eps_n^{1/2} / (4 c) <= |dist|
            const mp ratio = eps0_ / (16 * s.c * s.c * pow(abs(off_[i]), 2));
            long long kt = static_cast<long long>(ceil(log(ratio) / log(mp(2))));
            kt = std::max(kt, s.n + 1);
            while (kt > s.n + 1 && abs(dist(i, kt - 1)) >= sqrt(eps_big(kt - 1)) / (4 * s.c)) --kt;
            while (abs(dist(i, kt)) < sqrt(eps_big(kt)) / (4 * s.c)) ++kt;
            s.k_tilde = kt;
            t.k_tilde = kt;
            if (tau_ == 0) {
                s.n_prime = kt;
            } else {
                // clear window: point outside R and sqrt(lambda) outside R'
                long long np = kt;
                while (abs(off_[i]) < sqrt(eps_big(np)) / (2 * s.c)) ++np;
                s.n_prime = np;
            }
            t.n_prime = s.n_prime;
            const bool b_ok = clear(s.n_prime, 1) && (tau_ == 0 || clear(s.n_prime, 2, true));
            t.condition_b = b_ok;
            if (i + 1 < st_.size() && !(st_[i + 1].n > s.n_prime)) t.condition_b = false;
            if (!(t.condition_a && t.condition_b && t.inside_R) && out.complete) {
                out.complete = false;
                out.failed_stage = t.j;
                out.failure = !t.condition_a ? "condition a" : (!t.inside_R ? "R'' not inside R" : "condition b");
            }
            out.trace.push_back(t);
        }
        const mp two_pi_xi = 2 * boost::multiprecision::mpfr_float(boost::math::constants::pi<mp>()) * xi_;
        for (size_t i = 0; i < st_.size(); ++i) {
            const Stage& s = st_[i];
            Jump jp;
            jp.j = static_cast<int>(i) + 1;
            if (tau_ == 0) {
                auto window = [&](long long n, WindowCoefficient& w) {
                    auto [sum, bound] = f2_sum(n);
                    w.n = n;
                    w.kind = "clear";
                    w.value = dec(sum / two_pi_xi);
                    w.error = dec(bound / two_pi_xi);
                    w.certified = clear(n, 1) && isfinite(bound);
                    return std::pair<mp, mp>(sum, bound);
                };
                auto [sb, eb] = window(s.k, jp.before);
                auto [sa, ea] = window(s.k_tilde, jp.after);
                const mp fj = abs(sa - sb) - eb - ea;  // |f2 jump| lower bound (f2 = -sum)
                const mp diff = fj / two_pi_xi;
                const mp pred = pow(eps_big(s.k_tilde), mp(-0.5)) * s.V * s.V / (9 * s.c) / two_pi_xi;
                jp.difference = dec(diff);
                jp.predicted = dec(pred);
                jp.f2_jump = dec(fj);
                jp.unit_jump = fj >= 1;
                jp.exceeds = jp.before.certified && jp.after.certified && diff >= pred;
            } else {
                jp.before.n = s.n;
                jp.before.kind = "gap";
                jp.before.value = dec(mp(0));
                jp.before.error = dec(mp(0));
                jp.before.certified = abs(dist(i, s.n)) < s.delta;
                const mp a1 = -tau_ / two_pi_xi;
                jp.after.n = s.n_prime;
                jp.after.kind = "clear";
                jp.after.value = dec(a1);
                jp.after.error = dec(mp(0));
                jp.after.certified = clear(s.n_prime, 1) && clear(s.n_prime, 2, true);
                jp.difference = dec(abs(a1));
                jp.predicted = dec(abs(tau_) / two_pi_xi);
                jp.exceeds = jp.before.certified && jp.after.certified;
            }
            out.jumps.push_back(jp);
        }
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return out;
    }

private:
    const DyadicSchedule& s_;
    const PotentialSpec& V_;
    SuperResonanceOptions opt_;
    long d_ = 2;
    mp C_, P_, tau_, q_, eps0_, sqrtd_, nu_;
    std::string eps0_text_;
    long threeN_ = 9;
    QElem unit_, ubar_;
    int unit_norm_ = 1;
    std::vector<Stage> st_;
    mp xi_;
    std::vector<mp> off_;   // xi - c_i
    std::vector<mp> base_;  // (point at window n_i) - c_i
};

}  // namespace

SuperResonanceCandidate find_super_resonance(const DyadicSchedule& s, const PotentialSpec& V,
                                             const SuperResonanceOptions& opt) {
    const unsigned saved = mp::default_precision();
    mp::default_precision(80);
    try {
        Search search(s, V, opt);
        auto c = search.run();
        mp::default_precision(saved);
        return c;
    } catch (...) {
        mp::default_precision(saved);
        throw;
    }
}

std::string SuperResonanceCandidate::to_json(int indent) const {
    nlohmann::ordered_json j;
    j["schema"] = "superres/1";
    j["basis"] = {"1", "sqrt:" + std::to_string(d)};
    j["N"] = N;
    j["tau"] = static_cast<double>(tau);
    j["depth"] = depth;
    j["xi_star_decimal"] = xi_star_decimal;
    j["xi_offset_from_last_centre"] = xi_offset;
    j["lambda_decimal"] = lambda_decimal;
    j["complete"] = complete;
    if (!complete) {
        j["failed_stage"] = failed_stage;
        j["failure"] = failure;
    }
    auto& tr = j["trace"] = nlohmann::ordered_json::array();
    for (const auto& t : trace) {
        tr.push_back({{"j", t.j},
                      {"theta_coeffs", {t.theta_a, t.theta_b}},
                      {"order", t.order},
                      {"n_j", t.n},
                      {"k_j", t.k},
                      {"k_tilde_j", t.k_tilde},
                      {"n_prime_j", t.n_prime},
                      {"interval", {{"center", t.center}, {"half_width", t.delta}}},
                      {"offset_at_n_j", t.distance},
                      {"condition_a", t.condition_a},
                      {"condition_b", t.condition_b},
                      {"inside_R", t.inside_R}});
    }
    auto& js = j["jumps"] = nlohmann::ordered_json::array();
    auto wc = [](const WindowCoefficient& w) {
        return nlohmann::ordered_json{{"n", w.n}, {"kind", w.kind}, {"value", w.value}, {"error", w.error},
                                      {"certified", w.certified}};
    };
    for (const auto& jp : jumps) {
        nlohmann::ordered_json e{{"j", jp.j},         {"before", wc(jp.before)}, {"after", wc(jp.after)},
                                 {"difference", jp.difference}, {"predicted", jp.predicted},
                                 {"exceeds", jp.exceeds}};
        if (!jp.f2_jump.empty()) {
            e["f2_jump"] = jp.f2_jump;
            e["unit_jump"] = jp.unit_jump;
        }
        js.push_back(e);
    }
    return j.dump(indent);
}

std::pair<std::vector<WindowFit>, StitchReport> control_stitch(const DyadicSchedule& s, const PotentialSpec& Vq,
                                                               const ControlOptions& opt,
                                                               const GaugeOptions& gopt) {
    require(!Vq.decay().has_value(), ErrorCode::config, "control: potential must be quasi-periodic");
    require(opt.points >= 2, ErrorCode::config, "control: at least two points per window");
    const GaugeRun base = run_window(s, opt.first_window, Vq, gopt);
    std::vector<WindowFit> fits;
    for (int n = opt.first_window; n < opt.first_window + opt.windows; ++n) {
        ZoneSpec z = base.zones();
        z.width = s.zone_width(n);
        const GaugeRun run = base.with_zones(z);
        const CaseLabel label = classify(run, opt.lambda_text);
        require(!label.is_constant(), ErrorCode::config, "control: lambda must not give a constant IDS");
        const quad ratio = boost::multiprecision::pow(quad(4), quad(1) / (opt.points - 1));
        const auto ladder = geometric_ladder(s.eps(n), opt.points, ratio);
        const IdsExpansion ex = ids_expansion(run, label, ladder, opt.guard);
        require(ex.fit.has_value(), ErrorCode::fit, "control: window fit missing");
        fits.push_back({n, *ex.fit});
    }
    StitchReport rep = stitch(fits, opt.budget, opt.guard);
    return {fits, rep};
}

OscillationReport demonstrate_oscillation(const SuperResonanceCandidate& c) {
    OscillationReport r;
    r.candidate = c;
    r.oscillates = c.complete && !c.jumps.empty();
    for (const auto& j : c.jumps) r.oscillates = r.oscillates && j.exceeds;
    return r;
}

}  // namespace qpg
