#pragma once

#include "qpg/errors.hpp"
#include "qpg/numeric.hpp"

#include <cmath>
#include <utility>

namespace qpg {

// Brent's method on a sign-changing bracket; stops when the bracket is below xtol.
template <class T, class F>
T brent_root(F&& f, T a, T b, T xtol, int max_iter = 400) {
    using std::abs;
    T fa = f(a), fb = f(b);
    if (fa == 0) return a;
    if (fb == 0) return b;
    require((fa < 0) != (fb < 0), ErrorCode::numeric, "brent_root: bracket has no sign change");
    T c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if ((fb < 0) == (fc < 0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (abs(fc) < abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const T tol = 2 * eps_of<T>() * abs(b) + xtol / 2;
        const T m = (c - b) / 2;
        if (abs(m) <= tol || fb == 0) return b;
        if (abs(e) >= tol && abs(fa) > abs(fb)) {
            T p, q, r;
            const T s = fb / fa;
            if (a == c) {
                p = 2 * m * s;
                q = 1 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2 * m * q * (q - r) - (b - a) * (r - 1));
                q = (q - 1) * (r - 1) * (s - 1);
            }
            if (p > 0) q = -q; else p = -p;
            if (2 * p < std::min(3 * m * q - abs(tol * q), abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += abs(d) > tol ? d : (m > 0 ? tol : -tol);
        fb = f(b);
    }
    return b;
}

// Plain bisection on a predicate that is false at a and true at b.
template <class T, class P>
T bisect_predicate(P&& pred, T a, T b, T xtol, int max_iter = 2000) {
    using std::abs;
    for (int it = 0; it < max_iter && abs(b - a) > xtol; ++it) {
        const T m = (a + b) / 2;
        if (m == a || m == b) break;
        if (pred(m)) b = m; else a = m;
    }
    return (a + b) / 2;
}

// Brent's minimiser with an absolute tolerance (golden section + parabolic steps).
template <class T, class F>
std::pair<T, T> brent_min(F&& f, T a, T b, T xtol, int max_iter = 600) {
    using std::abs;
    using std::sqrt;
    const T cgold = (3 - sqrt(T(5))) / 2;
    T x = a + cgold * (b - a), w = x, v = x;
    T fx = f(x), fw = fx, fv = fx;
    T d = 0, e = 0;
    for (int it = 0; it < max_iter; ++it) {
        const T xm = (a + b) / 2;
        const T tol1 = xtol;
        const T tol2 = 2 * tol1;
        if (abs(x - xm) <= tol2 - (b - a) / 2) break;
        bool golden = true;
        if (abs(e) > tol1) {
            T r = (x - w) * (fx - fv);
            T q = (x - v) * (fx - fw);
            T p = (x - v) * q - (x - w) * r;
            q = 2 * (q - r);
            if (q > 0) p = -p;
            q = abs(q);
            const T etemp = e;
            e = d;
            if (!(abs(p) >= abs(q * etemp / 2) || p <= q * (a - x) || p >= q * (b - x))) {
                d = p / q;
                const T u = x + d;
                if (u - a < tol2 || b - u < tol2) d = xm - x >= 0 ? tol1 : -tol1;
                golden = false;
            }
        }
        if (golden) {
            e = (x >= xm) ? a - x : b - x;
            d = cgold * e;
        }
        const T u = abs(d) >= tol1 ? x + d : x + (d >= 0 ? tol1 : -tol1);
        const T fu = f(u);
        if (fu <= fx) {
            if (u >= x) a = x; else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return {x, fx};
}

}  // namespace qpg
