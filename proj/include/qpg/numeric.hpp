#pragma once

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/float128.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace qpg {

using quad = boost::multiprecision::float128;

template <class T>
struct Cplx {
    T re{0};
    T im{0};

    Cplx() = default;
    Cplx(T r) : re(r), im(0) {}
    Cplx(T r, T i) : re(r), im(i) {}
    template <class U>
    explicit Cplx(const Cplx<U>& o) : re(static_cast<T>(o.re)), im(static_cast<T>(o.im)) {}

    Cplx& operator+=(const Cplx& o) { re += o.re; im += o.im; return *this; }
    Cplx& operator-=(const Cplx& o) { re -= o.re; im -= o.im; return *this; }
    Cplx& operator*=(const Cplx& o) {
        T r = re * o.re - im * o.im;
        im = re * o.im + im * o.re;
        re = r;
        return *this;
    }
    Cplx& operator*=(const T& s) { re *= s; im *= s; return *this; }
    friend Cplx operator+(Cplx a, const Cplx& b) { return a += b; }
    friend Cplx operator-(Cplx a, const Cplx& b) { return a -= b; }
    friend Cplx operator*(Cplx a, const Cplx& b) { return a *= b; }
    friend Cplx operator*(Cplx a, const T& s) { return a *= s; }
    friend Cplx operator*(const T& s, Cplx a) { return a *= s; }
    friend Cplx operator/(const Cplx& a, const T& s) { return {a.re / s, a.im / s}; }
    friend Cplx operator/(const Cplx& a, const Cplx& b) {
        T d = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
    }
    Cplx operator-() const { return {-re, -im}; }
    bool operator==(const Cplx& o) const { return re == o.re && im == o.im; }
    Cplx conj() const { return {re, -im}; }
    T norm2() const { return re * re + im * im; }
};

template <class T>
inline Cplx<T> conj(const Cplx<T>& z) { return z.conj(); }

template <class T>
inline T abs(const Cplx<T>& z) {
    using std::hypot;
    return hypot(z.re, z.im);
}

template <class T>
inline T eps_of() { return std::numeric_limits<T>::epsilon(); }

template <class T>
T parse_real(const std::string& s);

template <>
inline double parse_real<double>(const std::string& s) { return std::stod(s); }

template <>
inline quad parse_real<quad>(const std::string& s) { return quad(s); }

template <class T>
inline T pi_of() { return boost::math::constants::pi<T>(); }

std::string to_string_full(const quad& x);
std::string to_string_full(double x);

}  // namespace qpg
