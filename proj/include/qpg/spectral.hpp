#pragma once

#include "qpg/gauge.hpp"
#include "qpg/lattice.hpp"

#include <optional>
#include <vector>

namespace qpg {

inline constexpr double kWideFactor = 10.0;

struct ResonanceZone {
    Freq theta;  // zone R(theta) is centred at -theta
    quad center = 0;
    quad half_width = 0;

    quad lo() const { return center - half_width; }
    quad hi() const { return center + half_width; }
    quad wide_lo() const { return center - kWideFactor * half_width; }
    quad wide_hi() const { return center + kWideFactor * half_width; }
};

class ZoneSet {
public:
    ZoneSet() = default;
    const std::vector<ResonanceZone>& zones() const { return zones_; }  // sorted by centre
    size_t size() const { return zones_.size(); }
    // Index of the open zone containing xi, or -1.
    template <class T>
    int locate(T xi) const;
    int locate_linear(double xi) const;
    int index_of(const Freq& theta) const;
    // Total zone length.
    quad measure() const;

    friend ZoneSet build_zones(const GeneratorBasis&, const std::vector<Freq>&, quad, bool);

private:
    std::vector<ResonanceZone> zones_;
    std::vector<double> lo_d_;
};

// Zones R(theta) with half-width width/(4|theta|). When `check` is set both the
// zones and the ten-times wider zones must be pairwise disjoint.
ZoneSet build_zones(const GeneratorBasis& basis, const std::vector<Freq>& freqs, quad width,
                    bool check = true);

// Largest dyadic width keeping wide zones disjoint over Theta'_{9N}, halved once.
quad default_delta(const LatticeShell& shell9N);
quad default_delta(BasisPtr basis, const std::vector<Freq>& theta0, int N);

// Data of the change of variables xi = theta0 + zeta inside R(-theta0).
template <class T>
struct ResonanceLocalData {
    T zeta = 0;
    T theta0 = 0;  // value of theta0
    T mu = 0;      // eps * tau
    T s = 0, t = 0;
    Cplx<T> nu;    // V_{theta0}
    Cplx<T> g;
    T eps = 0;
};

template <class T>
std::pair<T, T> sigma_pm(const ResonanceLocalData<T>& d);

// 2x2 Hermitian fiber matrix and its eigenvalues.
template <class T>
struct FiberMatrix {
    T a = 0, d = 0;  // diagonal: h2(xi;0), h2(xi - 2 theta0; 0)
    Cplx<T> b;       // h2(xi; -theta0)
    Cplx<T> c;       // h2(xi - 2 theta0; theta0)
    T hermitian_defect() const { return abs(b - c.conj()); }
    std::pair<T, T> eigenvalues() const;
};

// The spectral map G built from h2 and the zones of the run's active frequencies.
template <class T>
class SpectralMap {
public:
    SpectralMap(const GaugeRun& run, T eps, int order = -1);

    T eps() const { return eps_; }
    const ZoneSet& zones() const { return zones_; }
    const H2Evaluator<T>& evaluator() const { return ev_; }

    T diag(T xi) const;  // real part of h2(xi; 0)
    FiberMatrix<T> fiber(T xi, const Freq& theta0) const;  // xi in R(-theta0)
    ResonanceLocalData<T> local_data(const Freq& theta0, T zeta) const;
    std::pair<T, T> sigma(const Freq& theta0, T zeta) const;
    T G(T xi) const;
    // Zone id containing xi or -1.
    int zone_of(T xi) const { return zones_.locate(xi); }

private:
    const GaugeRun* run_;
    H2Evaluator<T> ev_;
    T eps_;
    ZoneSet zones_;
};

}  // namespace qpg
