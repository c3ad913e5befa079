#pragma once

#include "qpg/asymptotics.hpp"
#include "qpg/gauge.hpp"
#include "qpg/ids.hpp"
#include "qpg/potential.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qpg {

struct ScheduleParams {
    int N = 3;
    double P = 60;    // decay exponent of |V_theta| ~ C Z^-P
    double P0 = 1;    // diophantine exponent
    double C = 0;     // decay constant
    quad eps0 = quad(1e-30);
    int n_max = 12;   // windows checked explicitly
};

struct WindowCheck {
    int n = 0;
    quad eps = 0;            // eps_n = 2^-n eps0; I_n = [eps_n/4, eps_n]
    long long L_tilde = 0;   // ceil(eps_n^{-2N/P})
    long long max_order = 0; // 3N L_tilde
    quad zone_width = 0;     // eps_n^{1/2}; R(theta) half-width is zone_width/(4|theta|)
    double min_theta = 0;    // min |theta| over Theta'_{max_order}
    double min_separation = 0;  // min |theta| over Theta'_{2 max_order}
    double max_zone_length = 0;
    double measure_bound = 0;   // upper bound on meas(union of zones)
    double measure_cap = 0;     // eps_n^{1/6}
    bool disjoint = false;
    bool measure_ok = false;
};

class DyadicSchedule {
public:
    const ScheduleParams& params() const { return p_; }
    const BasisPtr& basis() const { return basis_; }
    const std::vector<Freq>& theta0() const { return theta0_; }
    const std::vector<WindowCheck>& windows() const { return windows_; }
    double smoothness() const { return 3.0 * p_.N * p_.P0 / p_.P; }

    quad eps(int n) const;
    long long L_tilde(int n) const;
    quad zone_width(int n) const;

    friend DyadicSchedule build_schedule(BasisPtr basis, const std::vector<Freq>& theta0,
                                         const ScheduleParams& p);

private:
    ScheduleParams p_;
    BasisPtr basis_;
    std::vector<Freq> theta0_;
    std::vector<WindowCheck> windows_;
};

// Requires 3 N P0 / P < 1/8 (config error naming the minimal P otherwise) and checks
// zone disjointness and the zone-measure bound for windows 0..n_max.
DyadicSchedule build_schedule(BasisPtr basis, const std::vector<Freq>& theta0, const ScheduleParams& p);
// Takes C and P from the potential's decay rule.
DyadicSchedule build_schedule(const PotentialSpec& V, int N, double P0, quad eps0, int n_max);

// Minimal admissible P for given N and P0 (strict inequality).
double minimal_smoothness_P(int N, double P0);

// Truncates V at L_tilde(n) (rebuilding from the decay rule), zone width eps_n^{1/2}.
GaugeRun run_window(const DyadicSchedule& s, int n, const PotentialSpec& V, const GaugeOptions& opt = {},
                    Mollifier mollifier = Mollifier::exp1);

struct TraceStage {
    int j = 0;
    std::string theta_a, theta_b;  // theta_j = a + b sqrt(d) (negative; zone centre -theta_j > 0)
    std::string order;             // Z(theta_j) = |a| + |b|
    long long n = 0;               // n_j: first window containing theta_j
    long long k = 0;               // k_j = n_j - 1
    long long k_tilde = 0;         // first window after n_j whose zone R(theta_j) misses the point
    long long n_prime = 0;         // clear window used for condition b
    std::string center;            // -theta_j
    std::string delta;             // half-width of R''(theta_j; n_j)
    std::string distance;          // (point at window n_j) - centre
    bool condition_a = false;
    bool condition_b = false;
    bool inside_R = false;         // R'' contained in R at n_j
};

struct WindowCoefficient {
    long long n = 0;
    std::string kind;     // "clear" or "gap"
    std::string value;    // eps^2 coefficient (tau = 0) or eps^1 coefficient (tau != 0) of N
    std::string error;    // rigorous bound on the omitted tail
    bool certified = false;
};

struct Jump {
    int j = 0;
    WindowCoefficient before, after;  // windows k_j and k_tilde_j (tau=0) or n_j and n'_j (tau!=0)
    std::string difference;    // |after - before| minus both error bounds
    std::string predicted;     // (2 pi xi)^-1 eps_{k_tilde}^{-1/2} |V_j|^2 / (9 |theta_j|), or |tau|/(2 pi sqrt(lambda))
    std::string f2_jump;       // |f2(k_tilde) - f2(k)| (tau = 0)
    bool exceeds = false;
    bool unit_jump = false;    // f2 jump >= 1
};

struct SuperResonanceCandidate {
    int d = 2;                     // basis (1, sqrt d)
    int depth = 0;
    int N = 3;
    quad tau = 0;
    std::string xi_star_decimal;   // 40 significant digits
    std::string xi_offset;         // xi* - centre of the last stage
    std::string lambda_decimal;
    std::vector<TraceStage> trace;
    std::vector<Jump> jumps;
    bool complete = false;
    int failed_stage = 0;          // 0 when complete
    std::string failure;
    double seconds = 0;

    std::string to_json(int indent = 2) const;
};

struct SuperResonanceOptions {
    int depth = 3;
    double xi_lo = 1.0, xi_hi = 3.0;  // initial interval for the first zone centre
    int enumerate_order = 24;         // explicit summation order for f2
};

// Greedy nested-interval construction (basis must be (1, sqrt d), standard generating set).
SuperResonanceCandidate find_super_resonance(const DyadicSchedule& s, const PotentialSpec& V,
                                             const SuperResonanceOptions& opt = {});

struct OscillationReport {
    SuperResonanceCandidate candidate;
    bool oscillates = false;  // every recorded jump exceeds its prediction
    // Fitted per-window expansions for a quasi-periodic control.
    std::vector<WindowFit> control_windows;
    std::optional<StitchReport> control_stitch;
    std::string control_lambda;
    bool control_consistent = false;
};

struct ControlOptions {
    std::string lambda_text = "1.7";
    int first_window = 0, windows = 4, points = 8;
    FitGuard guard;
    StitchBudget budget;
};

// Fits N(lambda; eps) per window for a quasi-periodic potential and stitches the fits.
std::pair<std::vector<WindowFit>, StitchReport> control_stitch(const DyadicSchedule& s, const PotentialSpec& Vq,
                                                               const ControlOptions& opt,
                                                               const GaugeOptions& gopt = {});

OscillationReport demonstrate_oscillation(const SuperResonanceCandidate& c);

}  // namespace qpg
