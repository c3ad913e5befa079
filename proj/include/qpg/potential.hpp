#pragma once

#include "qpg/lattice.hpp"
#include "qpg/numeric.hpp"

#include <optional>
#include <vector>

namespace qpg {

struct DecayRule {
    double C = 0;
    double P = 0;
    uint64_t seed = 0;  // drives the deterministic phase function
};

struct CoefEntry {
    Freq theta;
    Cplx<quad> value;
};

// Finite (or truncated) quasi-periodic potential V = sum V_theta e^{2 i theta x}.
class PotentialSpec {
public:
    PotentialSpec() = default;

    // Explicit coefficients. Missing partners -theta are filled by conjugation;
    // present partners must already be conjugate. The theta=0 entry (if any) is tau.
    static PotentialSpec from_coefficients(BasisPtr basis, const std::vector<Freq>& theta0,
                                           const std::vector<CoefEntry>& entries);

    // V_theta = C Z(theta)^{-P} e^{i alpha(theta)} for 0 < Z(theta) <= L, plus V_0 = tau.
    static PotentialSpec from_decay(BasisPtr basis, const std::vector<Freq>& theta0,
                                    const DecayRule& rule, double tau, int L,
                                    size_t cap = kDefaultShellCap);

    const LatticeShell& shell() const { return shell_; }
    const BasisPtr& basis() const { return shell_.basis(); }
    int dim() const { return basis()->dim(); }
    const std::optional<DecayRule>& decay() const { return decay_; }
    int L() const { return shell_.L(); }

    quad tau() const { return tau_; }
    Cplx<quad> coef(const Freq& f) const;
    Cplx<double> coef_d(const Freq& f) const { return Cplx<double>(coef(f)); }
    bool has(const Freq& f) const { return coeffs_.count(f) != 0; }
    // Nonzero-frequency support, lexicographically sorted.
    const std::vector<Freq>& support() const { return support_; }
    const FreqMap<Cplx<quad>>& coeffs() const { return coeffs_; }
    bool is_zero() const { return support_.empty() && tau_ == 0; }
    // All frequencies integer multiples of a single generator.
    bool is_periodic() const;

    double l2_norm() const;
    // sum_theta |V_theta| including tau
    double l1_norm() const;

    template <class T>
    T evaluate(T x) const;

    // Coefficients with Z(theta) <= L.
    PotentialSpec truncate(int L) const;
    // Same potential with tau removed.
    PotentialSpec without_tau() const;
    PotentialSpec with_tau(quad tau) const;
    PotentialSpec scaled(quad s) const;

    // Upper bound on sum_{Z(theta) > L} |V_theta| for the decay rule. Exact shell
    // counts are used up to `enumerated`, the (3Z)^{3l} bound beyond.
    double tail_bound(int L, int enumerated = -1) const;

    uint64_t hash() const;

private:
    void finalize();

    LatticeShell shell_;
    FreqMap<Cplx<quad>> coeffs_;
    std::vector<Freq> support_;
    quad tau_ = 0;
    std::optional<DecayRule> decay_;
};

inline constexpr double kImagTolerance = 1e-12;

}  // namespace qpg
