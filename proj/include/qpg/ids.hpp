#pragma once

#include "qpg/asymptotics.hpp"
#include "qpg/gauge.hpp"
#include "qpg/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qpg {

struct IdsOptions {
    // Root-finding tolerance on xi; negative selects 1e-13 (1+|lambda|) in double and
    // 64 ulp (1+|lambda|) in quad.
    double root_tol = -1;
};

// N(lambda; H2) = (2 pi)^-1 meas{xi : G(xi) <= lambda}, computed from the off-zone
// sublevel interval and per-zone sigma_+- sublevel sets.
template <class T>
T ids_value(const SpectralMap<T>& map, T lambda, const IdsOptions& opt = {});
quad ids_value(const GaugeRun& run, quad eps, quad lambda, const IdsOptions& opt = {});

// Independent route: integrates the indicator of {G <= lambda} by sampling G and
// bisecting every sign change of G - lambda.
double ids_indicator_quadrature(const SpectralMap<double>& map, double lambda, int samples_per_unit = 4096);

// Number of solutions of G(xi) = lambda (sign changes on a fine grid).
int count_level_crossings(const SpectralMap<double>& map, double lambda, int samples_per_unit = 4096);

enum class CaseKind {
    negative,
    nonresonant,
    res_inside_gap,
    res_integer,
    res_half_integer,
    res_flat,
    zero_tau_pos,
    zero_tau_neg,
    zero_tau_zero,
    degenerate
};

const char* case_name(CaseKind k);

struct CaseLabel {
    CaseKind kind = CaseKind::nonresonant;
    int k = 0;  // half-integer order for res_half_integer
    std::string lambda_text;
    quad lambda = 0;
    bool resonant = false;
    Freq theta0;
    quad theta0_value = 0;
    quad tau = 0;
    Cplx<quad> nu;
    quad s2 = 0;
    Cplx<quad> g2;
    quad discriminant = 0;      // s2 tau - Re(nu conj(g2))
    quad s2sq_minus_g2sq = 0;   // s2^2 - |g2|^2
    double tolerance = 1e-12;

    // N at eps = 0 and the exponent set of the expansion of N - constant.
    quad constant() const;
    bool is_constant() const;
    std::vector<double> exponents(int terms) const;
    // Analytic leading coefficient when one is known.
    std::optional<std::pair<double, quad>> analytic_leading() const;
};

// lambda_text is an exact literal (integer, p/q or decimal). Resonance is decided
// by exact arithmetic over Theta_{depth} of the run.
CaseLabel classify(const GaugeRun& run, const std::string& lambda_text, double tolerance = 1e-12);

struct IdsLadderPoint {
    quad eps = 0;
    quad value = 0;
    quad deviation = 0;  // value - constant
};

struct IdsExpansion {
    CaseLabel label;
    std::vector<IdsLadderPoint> points;
    std::optional<ExpansionFit> fit;
    std::optional<PowerLawFit> power_law;
    quad max_constant_deviation = 0;
    int detected_k = 0;  // degenerate cases: smallest k found, or -cap when none up to the cap
};

// Evaluates the ladder concurrently and fits with the label's exponent set.
IdsExpansion ids_expansion(const GaugeRun& run, const CaseLabel& label, const std::vector<quad>& ladder,
                           const FitGuard& guard = {}, const IdsOptions& opt = {});

}  // namespace qpg
