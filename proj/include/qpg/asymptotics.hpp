#pragma once

#include "qpg/numeric.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qpg {

using real_fit = long double;

struct Sample {
    real_fit eps = 0;
    real_fit value = 0;
};

// Geometric ladder eps_max, eps_max/ratio, ... (points entries).
std::vector<quad> geometric_ladder(quad eps_max, int points, quad ratio = 2);

struct FitGuard {
    double condition_cap = 1e10;  // of the column-equilibrated design matrix
    double residual_cap = 1e-6;   // max |residual| / max |value| before the model is rejected
    int extra_samples = 4;        // samples required beyond the number of exponents
};

struct ExpansionFit {
    std::vector<double> exponents;
    std::vector<real_fit> coefficients;
    std::vector<real_fit> errors;  // one-sigma least-squares uncertainties
    real_fit residual_norm = 0;    // max |residual|
    real_fit relative_residual = 0;
    double condition_number = 0;
    std::vector<Sample> ladder;
    bool model_failure = false;

    // Coefficient of eps^alpha (0 if alpha is not in the model).
    real_fit coefficient(double alpha) const;
    real_fit error(double alpha) const;
    ExpansionFit half_ladder_refit(const FitGuard& guard = {}) const;
};

// Least squares in the eps^alpha design. Throws a fit error on too few samples,
// rank deficiency or a condition number above the cap.
ExpansionFit fit_expansion(const std::vector<Sample>& samples, const std::vector<double>& exponents,
                           const FitGuard& guard = {});

// value ~ C eps^alpha fitted in log-log coordinates on samples above the noise floor.
struct PowerLawFit {
    double exponent = 0;
    real_fit coefficient = 0;
    real_fit log_residual = 0;  // max deviation in log space
    int used = 0;
    real_fit noise_floor = 0;
};
PowerLawFit fit_power_law(const std::vector<Sample>& samples, real_fit noise_floor = 0);

// Exponent sets {start, start+1, ..., start+count-1}.
std::vector<double> exponent_series(double start, int count);

// Windows I_n = [eps_n/4, eps_n], eps_n = 2^-n eps_0.
struct WindowFit {
    int n = 0;
    ExpansionFit fit;
};

struct StitchBudget {
    double sigma_factor = 10;     // multiples of the combined one-sigma errors
    double relative_floor = 1e-9; // relative slack on the coefficients
    double absolute_floor = 0;
};

struct Inconsistency {
    double exponent = 0;
    int n_a = 0, n_b = 0;
    real_fit value_a = 0, value_b = 0;
    real_fit difference = 0;
    real_fit budget = 0;
};

struct StitchReport {
    bool consistent = true;
    std::vector<int> windows;
    std::optional<ExpansionFit> global;
    std::vector<Inconsistency> certificate;
};

StitchReport stitch(std::vector<WindowFit> fits, const StitchBudget& budget = {},
                    const FitGuard& guard = {});

}  // namespace qpg
