#pragma once

#include "qpg/numeric.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

namespace qpg {

inline constexpr int kMaxGenerators = 4;

// Integer coordinates of a frequency over the generator basis.
struct Freq {
    std::array<int32_t, kMaxGenerators> c{};

    static Freq zero() { return {}; }
    static Freq unit(int i, int32_t k = 1) {
        Freq f;
        f.c[i] = k;
        return f;
    }
    bool is_zero() const {
        for (auto v : c)
            if (v != 0) return false;
        return true;
    }
    Freq operator-() const {
        Freq r;
        for (int i = 0; i < kMaxGenerators; ++i) r.c[i] = -c[i];
        return r;
    }
    Freq& operator+=(const Freq& o) {
        for (int i = 0; i < kMaxGenerators; ++i) c[i] += o.c[i];
        return *this;
    }
    Freq& operator-=(const Freq& o) {
        for (int i = 0; i < kMaxGenerators; ++i) c[i] -= o.c[i];
        return *this;
    }
    friend Freq operator+(Freq a, const Freq& b) { return a += b; }
    friend Freq operator-(Freq a, const Freq& b) { return a -= b; }
    friend Freq operator*(int32_t k, Freq a) {
        for (auto& v : a.c) v *= k;
        return a;
    }
    auto operator<=>(const Freq&) const = default;
    bool operator==(const Freq&) const = default;
    int l1() const {
        int s = 0;
        for (auto v : c) s += v < 0 ? -v : v;
        return s;
    }
};

struct FreqHash {
    size_t operator()(const Freq& f) const noexcept {
        uint64_t h = 1469598103934665603ull;
        for (auto v : f.c) {
            h ^= static_cast<uint32_t>(v);
            h *= 1099511628211ull;
        }
        return static_cast<size_t>(h ^ (h >> 29));
    }
};

template <class V>
using FreqMap = std::unordered_map<Freq, V, FreqHash>;

// Generators carry an exact textual form ("sqrt:2", "1", or a long decimal)
// so that any precision can be regenerated on demand.
struct Generator {
    std::string exact;
    double value_d = 0;
    quad value_q = 0;
};

class GeneratorBasis {
public:
    GeneratorBasis() = default;
    explicit GeneratorBasis(const std::vector<std::string>& exact_forms);

    int dim() const { return static_cast<int>(gens_.size()); }
    const Generator& gen(int i) const { return gens_.at(i); }
    const std::vector<Generator>& gens() const { return gens_; }

    double value_d(const Freq& f) const;
    quad value_q(const Freq& f) const;
    template <class T>
    T value(const Freq& f) const;

    // Decimal digits of precision the textual form supports (large for closed forms).
    static int literal_digits(const std::string& exact);
    static quad eval_exact_q(const std::string& exact);

    std::string format(const Freq& f) const;

private:
    std::vector<Generator> gens_;
};

template <>
inline double GeneratorBasis::value<double>(const Freq& f) const { return value_d(f); }
template <>
inline quad GeneratorBasis::value<quad>(const Freq& f) const { return value_q(f); }

using BasisPtr = std::shared_ptr<const GeneratorBasis>;

class LatticeShell {
public:
    LatticeShell() = default;

    int L() const { return L_; }
    const BasisPtr& basis() const { return basis_; }
    const std::vector<Freq>& theta0() const { return theta0_; }
    // Members sorted lexicographically on coefficients.
    const std::vector<Freq>& members() const { return members_; }
    bool contains(const Freq& f) const { return order_.count(f) != 0; }
    // Z(theta); -1 if not in the shell.
    int order(const Freq& f) const {
        auto it = order_.find(f);
        return it == order_.end() ? -1 : it->second;
    }
    std::vector<Freq> members_of_order(int z) const;
    std::vector<Freq> nonzero_members(int max_order) const;
    size_t size() const { return members_.size(); }

    void dump_csv(std::ostream& os) const;

    friend LatticeShell build_shell(BasisPtr basis, const std::vector<Freq>& theta0, int L,
                                    size_t cap);

private:
    BasisPtr basis_;
    std::vector<Freq> theta0_;
    int L_ = 0;
    std::vector<Freq> members_;
    FreqMap<int> order_;
};

inline constexpr size_t kDefaultShellCap = 1000000;

// theta0 must be symmetric, contain 0 and have 2l+1 elements.
LatticeShell build_shell(BasisPtr basis, const std::vector<Freq>& theta0, int L,
                         size_t cap = kDefaultShellCap);

std::vector<Freq> standard_theta0(int dim);

// Upper bound (3L)^{3l} for the shell size.
double shell_size_bound(int L, int dim);

struct DiophantineReport {
    double constant = 0;  // min |theta| Z(theta)^P0 over nonzero members
    Freq argmin;
    int argmin_order = 0;
    double floor = 0;
    bool below_floor = false;
};

DiophantineReport diophantine_margin(const LatticeShell& shell, double P0, double floor = 0.0);

using Rational = boost::multiprecision::cpp_rational;

// Exact value of an integer, p/q or decimal (optionally with exponent) literal.
Rational parse_rational(const std::string& text);

// theta^2 == q, decided exactly from the generators' closed forms (every generator is
// a rational or the square root of an integer).
bool square_equals(const GeneratorBasis& basis, const Freq& theta, const Rational& q);

}  // namespace qpg
