#include "qpg/oracle.hpp"

#include "qpg/errors.hpp"
#include "qpg/roots.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

namespace qpg {

namespace {

int periodic_axis(const PotentialSpec& V) {
    require(V.is_periodic(), ErrorCode::domain, "periodic oracle needs a single-generator potential");
    for (const auto& f : V.support())
        for (int i = 0; i < kMaxGenerators; ++i)
            if (f.c[i] != 0) return i;
    return 0;
}

template <class T>
T unwrap_delta(T a, T b) {
    // b - a reduced to (-pi, pi]
    const T pi = pi_of<T>();
    T d = b - a;
    while (d > pi) d -= 2 * pi;
    while (d <= -pi) d += 2 * pi;
    return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// HillSolver

template <class T>
HillSolver<T>::HillSolver(const PotentialSpec& V, T eps, T lambda_max, int order)
    : eps_(eps), lambda_max_(lambda_max) {
    using std::abs;
    using std::ceil;
    using std::sqrt;
    const int axis = periodic_axis(V);
    omega_ = V.basis() ? V.basis()->template value<T>(Freq::unit(axis, 1)) : T(1);
    period_ = pi_of<T>() / omega_;
    tau_ = static_cast<T>(V.tau());
    T l1 = 0, wmax = 0;
    for (const auto& f : V.support()) {
        const int k = f.c[axis];
        if (k <= 0) continue;
        Cplx<T> v(V.coef(f));
        modes_.push_back({2 * k * omega_, v});
        l1 += 2 * abs(v);
        wmax = std::max(wmax, 2 * k * omega_);
    }
    const T pot = abs(eps) * (l1 + abs(tau_));
    const T rate = std::max(sqrt(abs(lambda_max) + pot) + 1, wmax);
    const T turn = std::max(T(1), abs(lambda_max) + pot);
    T h = std::min(T(0.5) / rate, T(2) / turn);
    steps_ = std::max(4, static_cast<int>(ceil(period_ / h)));
    order_ = order > 0 ? order : (std::numeric_limits<T>::digits > 64 ? 40 : 24);
    tabulate();
}

template <class T>
void HillSolver<T>::tabulate() {
    using std::cos;
    using std::sin;
    h_ = period_ / steps_;
    const int K = order_;
    taylor_.assign(static_cast<size_t>(steps_) * (K + 1), T(0));
    for (int s = 0; s < steps_; ++s) {
        T* row = &taylor_[static_cast<size_t>(s) * (K + 1)];
        row[0] = tau_;
        const T x = s * h_;
        for (const auto& [w, v] : modes_) {
            // 2 Re( v e^{i w x} (i w h)^n / n! )
            Cplx<T> z = v * Cplx<T>(cos(w * x), sin(w * x));
            const Cplx<T> iwh(T(0), w * h_);
            for (int n = 0; n <= K; ++n) {
                row[n] += 2 * z.re;
                z = z * iwh / T(n + 1);
            }
        }
    }
}

template <class T>
typename HillSolver<T>::Mat2 HillSolver<T>::step_matrix(int s, T lambda) const {
    const int K = order_;
    const T* v = &taylor_[static_cast<size_t>(s) * (K + 1)];
    // scaled coefficients c_n h^n of y(x_s + h u); q_m h^m from the table
    std::vector<T> q(K + 1);
    for (int m = 0; m <= K; ++m) q[m] = eps_ * v[m];
    q[0] -= lambda;
    const T h2 = h_ * h_;
    auto run = [&](T y0, T dy0, T& y1, T& dy1) {
        std::vector<T> c(K + 1, T(0));
        c[0] = y0;
        c[1] = h_ * dy0;
        for (int n = 0; n + 2 <= K; ++n) {
            T acc = 0;
            for (int m = 0; m <= n; ++m) acc += q[m] * c[n - m];
            c[n + 2] = h2 * acc / T((n + 1) * (n + 2));
        }
        T y = 0, dy = 0;
        for (int n = K; n >= 0; --n) {
            y += c[n];
            if (n > 0) dy += n * c[n];
        }
        y1 = y;
        dy1 = dy / h_;
    };
    Mat2 M;
    run(T(1), T(0), M.a, M.c);
    run(T(0), T(1), M.b, M.d);
    return M;
}

template <class T>
std::vector<typename HillSolver<T>::Mat2> HillSolver<T>::path(T lambda) const {
    std::vector<Mat2> Y(steps_ + 1);
    Y[0] = {T(1), T(0), T(0), T(1)};
    for (int s = 0; s < steps_; ++s) {
        const Mat2 P = step_matrix(s, lambda);
        const Mat2& A = Y[s];
        Y[s + 1] = {P.a * A.a + P.b * A.c, P.a * A.b + P.b * A.d, P.c * A.a + P.d * A.c,
                    P.c * A.b + P.d * A.d};
    }
    return Y;
}

template <class T>
MonodromyResult<T> HillSolver<T>::monodromy(T lambda, bool derivative) const {
    using std::abs;
    using std::cbrt;
    const auto Y = path(lambda);
    const Mat2& M = Y.back();
    MonodromyResult<T> r;
    r.lambda = lambda;
    r.m11 = M.a;
    r.m12 = M.b;
    r.m21 = M.c;
    r.m22 = M.d;
    r.discriminant = M.a + M.d;
    if (derivative) {
        const T dl = cbrt(eps_of<T>()) * (1 + abs(lambda));
        const Mat2 P = path(lambda + dl).back();
        const Mat2 Q = path(lambda - dl).back();
        r.derivative = ((P.a + P.d) - (Q.a + Q.d)) / (2 * dl);
    }
    return r;
}

template <class T>
T HillSolver<T>::ids(T lambda) const {
    using std::abs;
    using std::acos;
    using std::atan2;
    using std::round;
    using std::sqrt;
    const auto Y = path(lambda);
    const Mat2& M = Y.back();
    const T trace = M.a + M.d;
    const T pi = pi_of<T>();

    // linear change of coordinates R applied along the path, start vector v
    T r00 = 1, r01 = 0, r11 = 1;
    T v0 = 1, v1 = 0;
    bool elliptic = abs(trace) < 2;
    if (elliptic) {
        // invariant quadratic form of M, made positive definite
        T q00 = M.c, q01 = (M.d - M.a) / 2, q11 = -M.b;
        if (q00 < 0) {
            q00 = -q00;
            q01 = -q01;
            q11 = -q11;
        }
        const T det = q00 * q11 - q01 * q01;
        if (q00 > 0 && det > 0) {
            r00 = sqrt(q00);
            r01 = q01 / r00;
            r11 = sqrt(det / q00);
        } else {
            elliptic = false;  // numerically parabolic
        }
    }
    if (!elliptic) {
        // start on a real eigen-direction: the advance is a multiple of pi
        const T disc = std::max(T(0), trace * trace - 4);
        const T mu = (trace + (trace >= 0 ? sqrt(disc) : -sqrt(disc))) / 2;
        const T e1x = M.b, e1y = mu - M.a;
        const T e2x = mu - M.d, e2y = M.c;
        const T n1 = abs(e1x) + abs(e1y), n2 = abs(e2x) + abs(e2y);
        if (std::max(n1, n2) > 0) {
            if (n1 >= n2) {
                v0 = e1x;
                v1 = e1y;
            } else {
                v0 = e2x;
                v1 = e2y;
            }
        }
    }
    auto angle = [&](const Mat2& Ys) {
        const T y = Ys.a * v0 + Ys.b * v1;
        const T dy = Ys.c * v0 + Ys.d * v1;
        const T w0 = r00 * y + r01 * dy;
        const T w1 = r11 * dy;
        return atan2(w0, w1);
    };
    T prev = angle(Y[0]);
    T advance = 0;
    for (int s = 1; s <= steps_; ++s) {
        const T cur = angle(Y[s]);
        advance += unwrap_delta(prev, cur);
        prev = cur;
    }
    if (!elliptic) advance = round(advance / pi) * pi;
    return advance * omega_ / (pi * pi);
}

template <class T>
HillSolver<T> HillSolver<T>::refined(int factor) const {
    HillSolver<T> r = *this;
    r.steps_ = steps_ * factor;
    r.tabulate();
    return r;
}

template <class T>
HillGap<T> hill_gap(const HillSolver<T>& solver, const PotentialSpec& V, int m) {
    using std::pow;
    require(m >= 1, ErrorCode::domain, "hill_gap: m must be positive");
    const T w = solver.omega();
    const T lc = m * m * w * w + solver.eps() * static_cast<T>(V.tau());
    const T lo = lc - T(0.4) * (2 * m - 1) * w * w;
    const T hi = lc + T(0.4) * (2 * m + 1) * w * w;
    auto D = [&](T l) { return solver.monodromy(l).gap_indicator(); };
    const T xtol = pow(eps_of<T>(), T(0.9)) * (1 + lc);
    auto [c, negd] = brent_min<T>([&](T l) { return -D(l); }, lo, hi, xtol);
    HillGap<T> g;
    g.center = c;
    g.indicator = -negd;
    if (g.indicator <= 0) {
        g.lower = g.upper = c;
        g.open = false;
        return g;
    }
    const T rtol = 4 * eps_of<T>() * (1 + lc);
    g.lower = brent_root<T>(D, lo, c, rtol);
    g.upper = brent_root<T>(D, c, hi, rtol);
    g.open = true;
    return g;
}

template <class T>
HillGap<T> hill_gap(const PotentialSpec& V, int m, T eps) {
    const int axis = periodic_axis(V);
    const T w = V.basis() ? V.basis()->template value<T>(Freq::unit(axis, 1)) : T(1);
    HillSolver<T> solver(V, eps, (m + 1) * (m + 1) * w * w);
    return hill_gap(solver, V, m);
}

template <class T>
T hill_ids(const PotentialSpec& V, T lambda, T eps) {
    using std::abs;
    HillSolver<T> solver(V, eps, std::max(abs(lambda), T(1)));
    return solver.ids(lambda);
}

// ---------------------------------------------------------------------------
// Jacobi eigensolver and inertia

template <class T>
EigenResult<T> jacobi_eigen(HermitianMatrix<T> A, bool want_vectors, T tol, int max_sweeps) {
    using std::abs;
    using std::sqrt;
    const int n = A.n;
    if (tol < 0) tol = 100 * eps_of<T>();
    std::vector<Cplx<T>> Vm;
    if (want_vectors) {
        Vm.assign(static_cast<size_t>(n) * n, Cplx<T>());
        for (int i = 0; i < n; ++i) Vm[static_cast<size_t>(i) * n + i] = Cplx<T>(T(1));
    }
    for (int i = 0; i < n; ++i) A(i, i).im = 0;
    auto off_and_total = [&](T& off, T& total) {
        off = 0;
        total = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const T v = A(i, j).norm2();
                total += v;
                if (i != j) off += v;
            }
        off = sqrt(off);
        total = sqrt(total);
    };
    EigenResult<T> res;
    T off = 0, total = 0;
    off_and_total(off, total);
    int sweep = 0;
    while (off > tol * total && total > 0) {
        require(sweep < max_sweeps, ErrorCode::numeric, "jacobi_eigen: no convergence");
        ++sweep;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                const Cplx<T> apq = A(p, q);
                const T r = abs(apq);
                if (r == 0 || r < eps_of<T>() * eps_of<T>() * total) continue;
                const Cplx<T> e = apq / r;
                const T app = A(p, p).re, aqq = A(q, q).re;
                const T th = (aqq - app) / (2 * r);
                T t = 1 / (abs(th) + sqrt(1 + th * th));
                if (th < 0) t = -t;
                const T c = 1 / sqrt(1 + t * t);
                const T s = t * c;
                const Cplx<T> se = e * s;            // J_pq
                const Cplx<T> mse = -(e.conj() * s);  // J_qp
                for (int k = 0; k < n; ++k) {
                    const Cplx<T> akp = A(k, p), akq = A(k, q);
                    A(k, p) = akp * c + akq * mse;
                    A(k, q) = akp * se + akq * c;
                }
                for (int k = 0; k < n; ++k) {
                    const Cplx<T> apk = A(p, k), aqk = A(q, k);
                    A(p, k) = apk * c + aqk * mse.conj();
                    A(q, k) = apk * se.conj() + aqk * c;
                }
                A(p, q) = Cplx<T>();
                A(q, p) = Cplx<T>();
                A(p, p).im = 0;
                A(q, q).im = 0;
                if (want_vectors)
                    for (int k = 0; k < n; ++k) {
                        Cplx<T>& vp = Vm[static_cast<size_t>(k) * n + p];
                        Cplx<T>& vq = Vm[static_cast<size_t>(k) * n + q];
                        const Cplx<T> a = vp, b = vq;
                        vp = a * c + b * mse;
                        vq = a * se + b * c;
                    }
            }
        off_and_total(off, total);
    }
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return A(a, a).re < A(b, b).re; });
    res.values.resize(n);
    for (int k = 0; k < n; ++k) res.values[k] = A(idx[k], idx[k]).re;
    if (want_vectors) {
        res.vectors.resize(static_cast<size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                res.vectors[static_cast<size_t>(i) * n + k] = Vm[static_cast<size_t>(i) * n + idx[k]];
    }
    res.sweeps = sweep;
    res.off_norm = off;
    return res;
}

template <class T>
int count_at_most(const HermitianMatrix<T>& A, T lambda) {
    const int n = A.n;
    HermitianMatrix<T> B = A;
    for (int i = 0; i < n; ++i) B(i, i) = Cplx<T>(B(i, i).re - lambda);
    int count = 0;
    T scale = 0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, abs(B(i, i)));
    const T tiny = eps_of<T>() * eps_of<T>() * (1 + scale);
    for (int k = 0; k < n; ++k) {
        T d = B(k, k).re;
        if (d <= 0) ++count;
        if (d == 0) d = -tiny;
        for (int i = k + 1; i < n; ++i) {
            const Cplx<T> lik = B(i, k) / d;
            if (lik.re == 0 && lik.im == 0) continue;
            for (int j = k + 1; j < n; ++j) B(i, j) -= lik * B(k, j);
        }
    }
    return count;
}

// ---------------------------------------------------------------------------
// TruncatedFiber

TruncatedFiber::TruncatedFiber(const PotentialSpec& V, int M) : M_(M), tau_(V.tau()) {
    require(M >= 1, ErrorCode::config, "truncated fiber: M must be >= 1");
    require(V.basis() != nullptr, ErrorCode::config, "truncated fiber: potential without basis");
    periodic_ = V.is_periodic();
    if (periodic_) {
        const int axis = periodic_axis(V);
        omega_ = V.basis()->value_q(Freq::unit(axis, 1));
        for (int k = -M; k <= M; ++k) {
            rows_.push_back(Freq::unit(axis, k));
            boundary_.push_back(std::abs(k) == M);
        }
        center_ = M;
    } else {
        const LatticeShell shell = build_shell(V.basis(), V.shell().theta0(), M);
        rows_ = shell.members();
        for (size_t i = 0; i < rows_.size(); ++i) {
            boundary_.push_back(shell.order(rows_[i]) == M);
            if (rows_[i].is_zero()) center_ = static_cast<int>(i);
        }
    }
    for (const auto& r : rows_) twice_q_.push_back(2 * V.basis()->value_q(r));
    const int n = size();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const Freq d = rows_[i] - rows_[j];
            if (V.has(d)) couplings_.push_back({i, j, V.coef(d)});
        }
}

double TruncatedFiber::max_abs_row() const {
    double m = 0;
    for (const auto& t : twice_q_) m = std::max(m, std::abs(static_cast<double>(t)) / 2);
    return m;
}

template <class T>
HermitianMatrix<T> TruncatedFiber::matrix(T xi0, T eps) const {
    const int n = size();
    HermitianMatrix<T> H(n);
    const T et = eps * static_cast<T>(tau_);
    for (int i = 0; i < n; ++i) {
        const T k = xi0 + static_cast<T>(twice_q_[i]);
        H(i, i) = Cplx<T>(k * k + et);
    }
    for (const auto& c : couplings_) H(c.i, c.j) = Cplx<T>(c.v) * eps;
    return H;
}

template <class T>
T TruncatedFiber::boundary_energy(T xi0) const {
    T best = std::numeric_limits<T>::max();
    for (int i = 0; i < size(); ++i)
        if (boundary_[i]) {
            const T k = xi0 + static_cast<T>(twice_q_[i]);
            best = std::min(best, k * k);
        }
    return best;
}

template <class T>
T TruncatedFiber::boundary_detuning(T xi0, T lambda) const {
    using std::abs;
    T best = std::numeric_limits<T>::max();
    for (int i = 0; i < size(); ++i)
        if (boundary_[i]) {
            const T k = xi0 + static_cast<T>(twice_q_[i]);
            best = std::min(best, abs(k * k - lambda));
        }
    return best;
}

// ---------------------------------------------------------------------------
// truncated_ids

namespace {

template <class T>
void gauss_legendre(int n, std::vector<T>& x, std::vector<T>& w) {
    using std::abs;
    using std::cos;
    x.assign(n, T(0));
    w.assign(n, T(0));
    const T pi = pi_of<T>();
    for (int i = 0; i < (n + 1) / 2; ++i) {
        T z = cos(pi * (i + T(0.75)) / (n + T(0.5)));
        T dp = 0;
        for (int it = 0; it < 100; ++it) {
            T p0 = 1, p1 = 0;
            for (int j = 0; j < n; ++j) {
                const T p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) * z * p1 - j * p2) / (j + 1);
            }
            dp = n * (z * p0 - p1) / (z * z - 1);
            const T dz = p0 / dp;
            z -= dz;
            if (abs(dz) < 4 * eps_of<T>()) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2 / ((1 - z * z) * dp * dp);
    }
}

template <class T>
TruncatedIdsResult<T> periodic_count(const TruncatedFiber& F, T lambda, T eps,
                                     const TruncatedIdsOptions& opt) {
    const T w = static_cast<T>(F.omega());
    TruncatedIdsResult<T> r;
    r.periodic = true;
    for (T x : {T(0), w})
        require(F.boundary_energy(x) > lambda + static_cast<T>(opt.margin), ErrorCode::domain,
                "truncated_ids: cutoff margin violated; increase M");
    auto count = [&](T x) {
        ++r.evaluations;
        return count_at_most(F.matrix(x, eps), lambda);
    };
    const int c0 = count(T(0)), c1 = count(w);
    T integral;
    if (c0 == c1) {
        integral = c0 * w;
    } else {
        require(std::abs(c0 - c1) == 1, ErrorCode::numeric, "truncated_ids: non-monotone band count");
        const T xc = bisect_predicate<T>([&](T x) { return count(x) == c1; }, T(0), w,
                                         8 * eps_of<T>() * w);
        integral = c0 * xc + c1 * (w - xc);
    }
    r.value = integral / pi_of<T>();
    return r;
}

template <class T>
TruncatedIdsResult<T> projector_mean(const TruncatedFiber& F, const PotentialSpec& V, T lambda,
                                     T eps, const TruncatedIdsOptions& opt) {
    using std::abs;
    using std::sqrt;
    TruncatedIdsResult<T> r;
    const T lp = lambda - eps * static_cast<T>(V.tau());
    const T root = sqrt(std::max(lp, T(0)));
    require(F.boundary_detuning(root, lambda) > static_cast<T>(opt.margin), ErrorCode::domain,
            "truncated_ids: cutoff margin violated; increase M");
    const T X = 2 * static_cast<T>(F.max_abs_row()) + sqrt(abs(lambda) + 1) + 1;
    const T coupling = abs(eps) * static_cast<T>(V.l1_norm());

    auto count = [&](T x) {
        ++r.evaluations;
        return count_at_most(F.matrix(x, eps), lambda);
    };
    auto weight = [&](T x) {
        ++r.evaluations;
        const auto e = jacobi_eigen(F.matrix(x, eps), true, T(1e-14));
        T s = 0;
        for (size_t k = 0; k < e.values.size(); ++k)
            if (e.values[k] <= lambda) s += e.vec(F.center(), static_cast<int>(k)).norm2();
        return s;
    };

    // windows around the unperturbed crossings (xi + 2 theta)^2 = lambda - eps tau
    std::vector<std::pair<T, T>> win;
    if (lp >= 0) {
        const T hw = 10 * coupling / std::max(root, sqrt(abs(eps)) + T(1e-3)) + T(1e-12);
        std::vector<T> shifts;
        for (int i = 0; i < F.size(); ++i) {
            const T t = static_cast<T>(2 * V.basis()->value_q(F.rows()[i]));
            for (T s : {-t - root, -t + root})
                if (s + hw >= 0 && s - hw <= X) shifts.push_back(s);
        }
        std::sort(shifts.begin(), shifts.end());
        for (T s : shifts) {
            const T a = std::max(T(0), s - hw), b = std::min(X, s + hw);
            if (!win.empty() && a <= win.back().second)
                win.back().second = std::max(win.back().second, b);
            else
                win.push_back({a, b});
        }
    }

    // locate every change of the count inside each window
    std::vector<T> breaks;
    std::function<void(T, int, T, int)> refine = [&](T a, int ca, T b, int cb) {
        if (ca == cb) return;
        if (std::abs(ca - cb) == 1 || b - a < 64 * eps_of<T>() * (1 + b)) {
            breaks.push_back(bisect_predicate<T>([&](T x) { return count(x) == cb; }, a, b,
                                                 8 * eps_of<T>() * (1 + b)));
            return;
        }
        const T m = (a + b) / 2;
        const int cm = count(m);
        refine(a, ca, m, cm);
        refine(m, cm, b, cb);
    };
    int prev_end = count(T(0));
    for (const auto& [a, b] : win) {
        const int ca = count(a);
        require(ca == prev_end, ErrorCode::numeric, "truncated_ids: crossing outside predicted windows");
        const int K = 32;
        int cprev = ca;
        T xprev = a;
        for (int k = 1; k <= K; ++k) {
            const T x = a + (b - a) * k / K;
            const int c = count(x);
            refine(xprev, cprev, x, c);
            xprev = x;
            cprev = c;
        }
        prev_end = cprev;
    }
    require(count(X) == prev_end, ErrorCode::numeric, "truncated_ids: crossing outside predicted windows");
    std::sort(breaks.begin(), breaks.end());

    std::vector<T> gx, gw;
    gauss_legendre<T>(opt.gauss_nodes, gx, gw);
    auto panel = [&](T a, T b) {
        T s = 0;
        const T c = (a + b) / 2, h = (b - a) / 2;
        for (size_t i = 0; i < gx.size(); ++i) s += gw[i] * weight(c + h * gx[i]);
        return s * h;
    };
    const T ptol = static_cast<T>(opt.panel_tol);
    std::function<T(T, T, T, int)> adapt = [&](T a, T b, T whole, int depth) -> T {
        const T m = (a + b) / 2;
        const T left = panel(a, m), right = panel(m, b);
        // eigenvector noise near avoided crossings sets the floor; depth is capped
        if (abs(left + right - whole) <= ptol * (b - a) / X || depth >= 24) return left + right;
        return adapt(a, m, left, depth + 1) + adapt(m, b, right, depth + 1);
    };
    std::vector<T> knots{T(0)};
    for (T b : breaks)
        if (b > knots.back()) knots.push_back(b);
    knots.push_back(X);
    T integral = 0;
    for (size_t i = 0; i + 1 < knots.size(); ++i) {
        const T a = knots[i], b = knots[i + 1];
        if (b <= a) continue;
        integral += adapt(a, b, panel(a, b), 0);
    }
    r.value = integral / pi_of<T>();
    return r;
}

}  // namespace

template <class T>
TruncatedIdsResult<T> truncated_ids(const PotentialSpec& V, T lambda, T eps,
                                    const TruncatedIdsOptions& opt) {
    const TruncatedFiber F(V, opt.M);
    if (F.periodic()) return periodic_count<T>(F, lambda, eps, opt);
    return projector_mean<T>(F, V, lambda, eps, opt);
}

quad rayleigh_schrodinger_f2(const PotentialSpec& V, quad xi, int M, quad eps0) {
    using std::abs;
    const TruncatedFiber F(V, M);
    const int P = 4;
    std::vector<quad> e(P), g(P);
    const quad target0 = xi * xi;
    for (int j = 0; j < P; ++j) {
        e[j] = eps0 / quad(1 << j);
        const auto ev = jacobi_eigen(F.matrix<quad>(xi, e[j]), false);
        const quad target = target0 + e[j] * V.tau();
        quad best = ev.values[0];
        for (const auto& v : ev.values)
            if (abs(v - target) < abs(best - target)) best = v;
        g[j] = (best - target) / (e[j] * e[j]);
    }
    // Neville extrapolation to eps = 0
    for (int k = 1; k < P; ++k)
        for (int j = P - 1; j >= k; --j) g[j] = (e[j - k] * g[j] - e[j] * g[j - 1]) / (e[j - k] - e[j]);
    return g[P - 1];
}

// ---------------------------------------------------------------------------
// OracleCache

OracleCache::OracleCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            entries_[j.at("k").get<std::string>()] = j.at("v").get<std::string>();
        } catch (const std::exception&) {
            // skip a torn trailing line
        }
    }
}

bool OracleCache::lookup(const std::string& key, std::string& value) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return false;
    value = it->second;
    return true;
}

void OracleCache::store(const std::string& key, const std::string& value) {
    if (!enabled()) return;
    std::lock_guard<std::mutex> lock(mu_);
    entries_[key] = value;
    std::ofstream out(path_, std::ios::app);
    require(static_cast<bool>(out), ErrorCode::io, "cannot write oracle cache " + path_);
    out << nlohmann::json{{"k", key}, {"v", value}}.dump() << "\n";
}

std::string OracleCache::key(uint64_t potential_hash, const std::string& kind, const std::string& lambda,
                             const std::string& eps, int M) {
    std::ostringstream os;
    os << std::hex << potential_hash << std::dec << "|" << kind << "|" << lambda << "|" << eps << "|" << M;
    return os.str();
}

// ---------------------------------------------------------------------------

#define QPG_ORACLE_INSTANTIATE(T)                                                                   \
    template class HillSolver<T>;                                                                   \
    template HillGap<T> hill_gap<T>(const PotentialSpec&, int, T);                                  \
    template HillGap<T> hill_gap<T>(const HillSolver<T>&, const PotentialSpec&, int);               \
    template T hill_ids<T>(const PotentialSpec&, T, T);                                             \
    template EigenResult<T> jacobi_eigen<T>(HermitianMatrix<T>, bool, T, int);                      \
    template int count_at_most<T>(const HermitianMatrix<T>&, T);                                    \
    template HermitianMatrix<T> TruncatedFiber::matrix<T>(T, T) const;                              \
    template T TruncatedFiber::boundary_energy<T>(T) const;                                         \
    template T TruncatedFiber::boundary_detuning<T>(T, T) const;                                    \
    template TruncatedIdsResult<T> truncated_ids<T>(const PotentialSpec&, T, T, const TruncatedIdsOptions&);

QPG_ORACLE_INSTANTIATE(double)
QPG_ORACLE_INSTANTIATE(quad)

}  // namespace qpg
