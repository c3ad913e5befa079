#include "qpg/lattice.hpp"

#include "qpg/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace qpg {

namespace {

bool is_integer_text(const std::string& s) {
    if (s.empty()) return false;
    size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

}  // namespace

int GeneratorBasis::literal_digits(const std::string& exact) {
    if (exact.rfind("sqrt:", 0) == 0 || is_integer_text(exact)) return 1 << 20;
    auto slash = exact.find('/');
    if (slash != std::string::npos) return 1 << 20;
    int digits = 0;
    bool leading = true;
    for (char ch : exact) {
        if (ch == 'e' || ch == 'E') break;
        if (!std::isdigit(static_cast<unsigned char>(ch))) continue;
        if (leading && ch == '0') continue;
        leading = false;
        ++digits;
    }
    return digits;
}

quad GeneratorBasis::eval_exact_q(const std::string& exact) {
    using std::sqrt;
    if (exact.rfind("sqrt:", 0) == 0) {
        const std::string arg = exact.substr(5);
        require(is_integer_text(arg) && arg[0] != '-', ErrorCode::config,
                "generator '" + exact + "': sqrt argument must be a non-negative integer");
        return sqrt(quad(arg));
    }
    auto slash = exact.find('/');
    if (slash != std::string::npos) {
        const std::string p = exact.substr(0, slash), q = exact.substr(slash + 1);
        require(is_integer_text(p) && is_integer_text(q), ErrorCode::config,
                "generator '" + exact + "': malformed rational");
        return quad(p) / quad(q);
    }
    try {
        return quad(exact);
    } catch (const std::exception&) {
        fail(ErrorCode::config, "generator '" + exact + "': not a number");
    }
}

GeneratorBasis::GeneratorBasis(const std::vector<std::string>& exact_forms) {
    require(!exact_forms.empty(), ErrorCode::config, "basis: at least one generator required");
    require(static_cast<int>(exact_forms.size()) <= kMaxGenerators, ErrorCode::config,
            "basis: at most " + std::to_string(kMaxGenerators) + " generators supported");
    for (const auto& s : exact_forms) {
        Generator g;
        g.exact = s;
        g.value_q = eval_exact_q(s);
        g.value_d = static_cast<double>(g.value_q);
        require(g.value_q > 0, ErrorCode::config, "generator '" + s + "' must be positive");
        const bool closed = literal_digits(s) >= (1 << 20);
        require(closed || literal_digits(s) >= 30, ErrorCode::config,
                "generator '" + s + "': decimal literals need at least 30 significant digits");
        gens_.push_back(std::move(g));
    }
    for (size_t i = 0; i < gens_.size(); ++i)
        for (size_t j = i + 1; j < gens_.size(); ++j)
            require(gens_[i].value_q != gens_[j].value_q, ErrorCode::config,
                    "basis: generators must be pairwise distinct");
}

double GeneratorBasis::value_d(const Freq& f) const {
    double s = 0;
    for (int i = 0; i < dim(); ++i) s += f.c[i] * gens_[i].value_d;
    return s;
}

quad GeneratorBasis::value_q(const Freq& f) const {
    quad s = 0;
    for (int i = 0; i < dim(); ++i) s += quad(f.c[i]) * gens_[i].value_q;
    return s;
}

std::string GeneratorBasis::format(const Freq& f) const {
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < dim(); ++i) os << (i ? "," : "") << f.c[i];
    os << ')';
    return os.str();
}

std::vector<Freq> standard_theta0(int dim) {
    std::vector<Freq> t{Freq::zero()};
    for (int i = 0; i < dim; ++i) {
        t.push_back(Freq::unit(i, 1));
        t.push_back(Freq::unit(i, -1));
    }
    return t;
}

double shell_size_bound(int L, int dim) { return std::pow(3.0 * L, 3.0 * dim); }

LatticeShell build_shell(BasisPtr basis, const std::vector<Freq>& theta0, int L, size_t cap) {
    require(basis != nullptr, ErrorCode::config, "build_shell: missing basis");
    require(L >= 0, ErrorCode::domain, "build_shell: L must be non-negative");
    const int l = basis->dim();
    require(static_cast<int>(theta0.size()) == 2 * l + 1, ErrorCode::config,
            "theta: must have 2l+1 elements");
    FreqMap<int> seen;
    for (const auto& t : theta0) {
        for (int i = l; i < kMaxGenerators; ++i)
            require(t.c[i] == 0, ErrorCode::config, "theta: coefficient beyond basis dimension");
        require(seen.emplace(t, 0).second, ErrorCode::config, "theta: duplicate element");
    }
    require(seen.count(Freq::zero()) == 1, ErrorCode::config, "theta: must contain 0");
    for (const auto& t : theta0)
        require(seen.count(-t) == 1, ErrorCode::config, "theta: must be symmetric");

    LatticeShell sh;
    sh.basis_ = std::move(basis);
    sh.theta0_ = theta0;
    std::sort(sh.theta0_.begin(), sh.theta0_.end());
    sh.L_ = L;
    sh.order_.emplace(Freq::zero(), 0);
    std::vector<Freq> frontier{Freq::zero()};
    for (int k = 1; k <= L; ++k) {
        std::vector<Freq> next;
        for (const auto& f : frontier)
            for (const auto& t : sh.theta0_) {
                Freq g = f + t;
                if (sh.order_.emplace(g, k).second) {
                    next.push_back(g);
                    if (sh.order_.size() > cap)
                        fail(ErrorCode::capacity, "lattice shell exceeds cap of " +
                                                      std::to_string(cap) + " members at L=" +
                                                      std::to_string(k));
                }
            }
        frontier = std::move(next);
    }
    sh.members_.reserve(sh.order_.size());
    for (const auto& [f, z] : sh.order_) sh.members_.push_back(f);
    std::sort(sh.members_.begin(), sh.members_.end());

    for (const auto& f : sh.members_) {
        if (f.is_zero()) continue;
        using std::abs;
        if (abs(sh.basis_->value_q(f)) < quad(1e-12))
            fail(ErrorCode::config, "basis is not rationally independent: combination " +
                                        sh.basis_->format(f) + " vanishes within 1e-12");
    }
    return sh;
}

std::vector<Freq> LatticeShell::members_of_order(int z) const {
    std::vector<Freq> out;
    for (const auto& f : members_)
        if (order_.at(f) == z) out.push_back(f);
    return out;
}

std::vector<Freq> LatticeShell::nonzero_members(int max_order) const {
    std::vector<Freq> out;
    for (const auto& f : members_)
        if (!f.is_zero() && order_.at(f) <= max_order) out.push_back(f);
    return out;
}

void LatticeShell::dump_csv(std::ostream& os) const {
    const int l = basis_->dim();
    for (int i = 0; i < l; ++i) os << "c" << i << ',';
    os << "value,order\n";
    for (const auto& f : members_) {
        for (int i = 0; i < l; ++i) os << f.c[i] << ',';
        os << to_string_full(basis_->value_q(f)) << ',' << order_.at(f) << '\n';
    }
}

DiophantineReport diophantine_margin(const LatticeShell& shell, double P0, double floor) {
    DiophantineReport r;
    r.floor = floor;
    bool any = false;
    for (const auto& f : shell.members()) {
        if (f.is_zero()) continue;
        const int z = shell.order(f);
        const double v = std::abs(shell.basis()->value_d(f)) * std::pow(double(z), P0);
        if (!any || v < r.constant) {
            r.constant = v;
            r.argmin = f;
            r.argmin_order = z;
            any = true;
        }
    }
    require(any, ErrorCode::domain, "diophantine_margin: empty nonzero frequency set");
    r.below_floor = r.constant < floor;
    return r;
}

Rational parse_rational(const std::string& text) {
    using boost::multiprecision::cpp_int;
    std::string t;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) t += ch;
    require(!t.empty(), ErrorCode::config, "empty number");
    auto slash = t.find('/');
    if (slash != std::string::npos) {
        const std::string p = t.substr(0, slash), q = t.substr(slash + 1);
        require(is_integer_text(p) && is_integer_text(q), ErrorCode::config, "malformed rational '" + text + "'");
        require(cpp_int(q) != 0, ErrorCode::config, "zero denominator in '" + text + "'");
        return Rational(cpp_int(p), cpp_int(q));
    }
    long exp10 = 0;
    auto e = t.find_first_of("eE");
    std::string mant = t;
    if (e != std::string::npos) {
        const std::string ex = t.substr(e + 1);
        require(is_integer_text(ex), ErrorCode::config, "malformed exponent in '" + text + "'");
        exp10 = std::stol(ex);
        mant = t.substr(0, e);
    }
    bool neg = false;
    if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
        neg = mant[0] == '-';
        mant = mant.substr(1);
    }
    auto dot = mant.find('.');
    std::string digits = mant;
    if (dot != std::string::npos) {
        digits = mant.substr(0, dot) + mant.substr(dot + 1);
        exp10 -= static_cast<long>(mant.size() - dot - 1);
    }
    require(!digits.empty() && is_integer_text(digits), ErrorCode::config, "not a number: '" + text + "'");
    cpp_int num(digits);
    cpp_int den = 1;
    for (long k = 0; k < std::abs(exp10); ++k) (exp10 > 0 ? num : den) *= 10;
    Rational r(num, den);
    return neg ? Rational(-r) : r;
}

namespace {

// r * sqrt(n) with n squarefree
struct Surd {
    Rational r;
    uint64_t n = 1;
};

uint64_t squarefree_split(uint64_t n, uint64_t& root) {
    root = 1;
    for (uint64_t p = 2; p * p <= n; ++p)
        while (n % (p * p) == 0) {
            n /= p * p;
            root *= p;
        }
    return n;
}

Surd exact_generator(const std::string& exact) {
    if (exact.rfind("sqrt:", 0) == 0) {
        const uint64_t a = std::stoull(exact.substr(5));
        uint64_t root = 1;
        const uint64_t n = squarefree_split(a, root);
        return {Rational(root), a == 0 ? 1 : n};
    }
    return {parse_rational(exact), 1};
}

}  // namespace

bool square_equals(const GeneratorBasis& basis, const Freq& theta, const Rational& q) {
    // group theta = sum_n A_n sqrt(n) by squarefree radicand
    std::map<uint64_t, Rational> A;
    for (int i = 0; i < basis.dim(); ++i) {
        if (theta.c[i] == 0) continue;
        const Surd s = exact_generator(basis.gen(i).exact);
        A[s.n] += s.r * theta.c[i];
    }
    std::map<uint64_t, Rational> sq;
    for (const auto& [n, a] : A)
        for (const auto& [m, b] : A) {
            const uint64_t g = std::gcd(n, m);
            const uint64_t rad = (n / g) * (m / g);
            sq[rad] += a * b * Rational(g);
        }
    for (const auto& [rad, v] : sq) {
        if (rad == 1) {
            if (v != q) return false;
        } else if (v != 0) {
            return false;
        }
    }
    if (sq.count(1) == 0 && q != 0) return false;
    return true;
}

}  // namespace qpg
