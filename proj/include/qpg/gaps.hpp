#pragma once

#include "qpg/asymptotics.hpp"
#include "qpg/gauge.hpp"
#include "qpg/spectral.hpp"

#include <vector>

namespace qpg {

// Gap [sigma_-^max, sigma_+^min] generated by the zone pair R(+-theta0).
struct GapEndpoints {
    Freq theta0;  // normalised so that its value is positive
    quad eps = 0;
    quad sigma_minus_max = 0;
    quad sigma_plus_min = 0;
    quad zeta_minus = 0;  // argmax of sigma_-
    quad zeta_plus = 0;   // argmin of sigma_+
    quad gap = 0;         // max(0, sigma_+^min - sigma_-^max)
    quad zone_half_width = 0;
    // An extremum left the inner hundredth of the zone; the caller should reduce eps.
    bool boundary_flag = false;
};

GapEndpoints gap_endpoints(const SpectralMap<quad>& map, const Freq& theta0);
GapEndpoints gap_endpoints(const GaugeRun& run, const Freq& theta0, quad eps);

// Leading gap term from the symbol: 2|V_theta0| eps, or 2|f_p(theta0; -theta0)| eps^p
// for the first p with a nonzero off-diagonal coefficient.
struct GapLeadingTerm {
    int power = 0;  // 0 when no nonzero coefficient exists up to the run's h2 order
    quad coefficient = 0;
};
GapLeadingTerm gap_leading_term(const GaugeRun& run, const Freq& theta0);

struct GapExpansion {
    Freq theta0;
    std::vector<GapEndpoints> points;
    ExpansionFit fit;  // natural powers 1..N-1 (at least two)
    GapLeadingTerm predicted;
};

// The ladder is evaluated concurrently; the fit is single-threaded.
GapExpansion gap_expansion(const GaugeRun& run, const Freq& theta0, const std::vector<quad>& ladder,
                           const FitGuard& guard = {});

}  // namespace qpg
