#pragma once

#include "qpg/potential.hpp"
#include "qpg/symbols.hpp"

#include <map>
#include <mutex>
#include <memory>
#include <string>
#include <vector>

namespace qpg {

struct GaugeOptions {
    int N = 3;
    int k_tilde = -1;   // default 2N+1
    int depth = -1;     // orders of the recursion actually built; default k_tilde
    int h2_order = -1;  // orders of h2 used by evaluators; default N
    bool check_zones = true;
};

// Zone parameters shared by the run and its evaluators.
struct ZoneSpec {
    quad width = quad(1) / 16;
    Mollifier mollifier = Mollifier::exp1;

    template <class T>
    CutoffFamily<T> family() const {
        return CutoffFamily<T>{static_cast<T>(width), mollifier};
    }
};

class GaugeRun {
public:
    const PotentialSpec& potential() const { return V_; }
    const ZoneSpec& zones() const { return zones_; }
    int N() const { return N_; }
    int k_tilde() const { return k_tilde_; }
    int depth() const { return depth_; }
    int h2_order() const { return h2_order_; }
    ExprPool& pool() const { return *pool_; }

    // Index j is the epsilon power; entries below 1 (or 2 for T) are empty.
    const std::vector<HomSymbol>& psi() const { return psi_; }
    const std::vector<HomSymbol>& B() const { return B_; }
    const std::vector<HomSymbol>& T() const { return T_; }
    const std::vector<HomSymbol>& y() const { return y_; }
    const std::vector<HomSymbol>& h2() const { return h2_; }

    // epsilon^p coefficient of h2 at theta (kZero if absent).
    NodeId f(int p, const Freq& theta) const;
    std::vector<Freq> h2_support() const;

    // Same DAG, different coefficient values / cut-offs.
    GaugeRun with_potential(const PotentialSpec& V) const;
    GaugeRun with_zones(const ZoneSpec& z) const;

    friend GaugeRun run_gauge(const PotentialSpec& V, const ZoneSpec& zones, const GaugeOptions& opt);

private:
    PotentialSpec V_;
    ZoneSpec zones_;
    int N_ = 0, k_tilde_ = 0, depth_ = 0, h2_order_ = 0;
    std::shared_ptr<ExprPool> pool_;
    std::vector<HomSymbol> psi_, B_, T_, y_, h2_;
};

GaugeRun run_gauge(const PotentialSpec& V, const ZoneSpec& zones, const GaugeOptions& opt = {});

// f_p(.; theta) as an expression node; p range per the run.
NodeId extract_f(const GaugeRun& run, int p, const Freq& theta);

// Evaluates h2(xi; theta) = [theta=0] xi^2 + sum_{p<=order} eps^p f_p(xi; theta).
template <class T>
class H2Evaluator {
public:
    H2Evaluator() = default;
    explicit H2Evaluator(const GaugeRun& run, int order = -1);

    int order() const { return order_; }
    const GaugeRun& run() const { return *run_; }
    // Coefficients of eps^1..eps^order.
    void orders(T xi, const Freq& theta, std::vector<Cplx<T>>& out) const;
    Cplx<T> h2(T xi, const Freq& theta, T eps) const;
    // h2 without the xi^2 term and with eps^1 tau removed at theta = 0.
    Cplx<T> correction(T xi, const Freq& theta, T eps) const;
    const CutoffFamily<T>& cutoffs() const { return cut_; }

private:
    const Program<T>& program(const Freq& theta) const;

    const GaugeRun* run_ = nullptr;
    int order_ = 0;
    CutoffFamily<T> cut_;
    mutable std::map<Freq, std::unique_ptr<Program<T>>> progs_;
    std::shared_ptr<std::mutex> mu_ = std::make_shared<std::mutex>();
};

struct GaugeCheckReport {
    double cancellation_max = 0;      // max |ad(H0;Psi_j) + B_j^nat + T_j^nat|
    double hermitian_max = 0;         // |h2(xi;theta) - conj h2(xi+2theta;-theta)|
    double reflection_max = 0;        // |h2(xi;theta) - h2(-xi;-theta)|, even potentials only
    bool reflection_checked = false;
    int refined = 0;                  // samples re-evaluated in quad
    double off_zone_max = 0;          // |h2(xi;theta)| for xi outside R(theta)
    double first_order_max = 0;       // eps^1 coefficient vs V_theta (1 - phi_theta)
    bool support_ok = true;           // h2 support within Theta_{k_tilde L}, V supported in Theta_L
    bool structure_ok = true;         // every y_p term has p V's and p-1 chi's
    int samples = 0;
    std::vector<std::string> notes;
};

// Pointwise invariant checks on a set of sample points. Evaluated in double; samples whose
// defect is above the double rounding floor are re-evaluated in quad.
GaugeCheckReport check_gauge_invariants(const GaugeRun& run, const std::vector<double>& xis);

struct NormReport {
    std::vector<double> psi_norm;  // per order
    std::vector<double> bt_norm;   // ||b_j|| + ||t_j|| per order
    double V_norm = 0;             // sum_theta |V_theta|
    double y_norm = 0;             // at eps
    double eps = 0;
    double y_ratio = 0;            // y_norm / (eps V_norm)
    bool y_bound_ok = true;        // y_ratio <= 2
};

NormReport verify_norm_estimates(const GaugeRun& run, double eps, const SupGrid& grid);

}  // namespace qpg
